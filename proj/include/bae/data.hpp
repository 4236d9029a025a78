#pragma once

// Dataset ingestion (CSV), min-max normalization, labelled-benchmark
// conversion and the synthetic Gaussian-plus-uniform benchmark.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bae/errors.hpp"
#include "bae/matrix.hpp"
#include "bae/metrics.hpp"
#include "bae/random.hpp"
#include "bae/text.hpp"

namespace bae {

struct FeatureRange {
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

struct Provenance {
    std::string source;
    bool normalized = false;
    std::vector<FeatureRange> ranges;  // pre-normalization per-feature range
    std::vector<std::string> notes;
};

struct Dataset {
    DataMatrix matrix;
    std::optional<Labels> labels;
    std::vector<std::string> feature_names;
    Provenance provenance;

    std::size_t rows() const noexcept { return matrix.rows(); }
    std::size_t cols() const noexcept { return matrix.cols(); }
    bool labelled() const noexcept { return labels.has_value(); }

    std::size_t outlier_count() const {
        if (!labels) return 0;
        return static_cast<std::size_t>(std::count(labels->begin(), labels->end(), 1));
    }

    double outlier_fraction() const {
        return rows() == 0 ? 0.0 : static_cast<double>(outlier_count()) / static_cast<double>(rows());
    }
};

struct CsvOptions {
    bool has_header = true;
    char delimiter = ',';
    /// Column name, or zero-based index when no header column carries that name.
    std::optional<std::string> label_column;
    /// Label value marking outliers. When unset, 0/1 labels are taken as is
    /// and any other labelling marks every non-majority class as outlier.
    std::optional<std::string> outlier_label;
};

namespace detail {

inline bool is_missing(std::string_view cell) {
    cell = trim(cell);
    return cell.empty() || cell == "?" || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" ||
           cell == "null";
}

inline Labels encode_labels(const std::vector<std::string>& raw, const CsvOptions& opts) {
    Labels labels(raw.size());
    if (opts.outlier_label) {
        for (std::size_t i = 0; i < raw.size(); ++i) labels[i] = raw[i] == *opts.outlier_label ? 1 : 0;
        return labels;
    }
    bool binary = true;
    for (std::size_t i = 0; i < raw.size() && binary; ++i) {
        const auto v = parse_double(raw[i]);
        if (!v || (*v != 0.0 && *v != 1.0)) binary = false;
    }
    if (binary) {
        for (std::size_t i = 0; i < raw.size(); ++i) labels[i] = *parse_double(raw[i]) == 1.0 ? 1 : 0;
        return labels;
    }
    // Majority class are the inliers; ties go to the lexicographically first class.
    std::map<std::string, std::size_t> counts;
    for (const auto& r : raw) ++counts[r];
    const auto majority = std::max_element(counts.begin(), counts.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
    for (std::size_t i = 0; i < raw.size(); ++i) labels[i] = raw[i] == majority->first ? 0 : 1;
    return labels;
}

inline void parse_provenance_comment(std::string_view line, Provenance& prov) {
    std::istringstream in{std::string(line.substr(1))};
    std::string key;
    in >> key;
    if (key == "source") {
        std::string rest;
        std::getline(in, rest);
        prov.source = std::string(trim(rest));
    } else if (key == "normalized") {
        prov.normalized = true;
    } else if (key == "range") {
        std::size_t j = 0;
        std::string lo, hi;
        if (in >> j >> lo >> hi) {
            const auto a = parse_double(lo);
            const auto b = parse_double(hi);
            if (a && b) {
                if (prov.ranges.size() <= j) prov.ranges.resize(j + 1);
                prov.ranges[j] = {*a, *b};
            }
        }
    } else if (key == "note") {
        std::string rest;
        std::getline(in, rest);
        prov.notes.emplace_back(trim(rest));
    }
}

}  // namespace detail

/// Parses a numeric CSV. Lines starting with '#' carry provenance and are
/// otherwise skipped. Row numbers in errors are 1-based file lines, columns
/// are 1-based fields.
inline Dataset load_csv(std::istream& in, const CsvOptions& opts = {}, const std::string& source = "<stream>") {
    Dataset ds;
    ds.provenance.source = source;
    std::vector<std::string> header;
    std::optional<std::size_t> label_idx;
    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t width = 0;
    std::size_t rows = 0;
    bool have_header = !opts.has_header;

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.front() == '#') {
            detail::parse_provenance_comment(line, ds.provenance);
            continue;
        }
        const auto fields = split(line, opts.delimiter);
        if (!have_header) {
            for (auto f : fields) header.emplace_back(trim(f));
            have_header = true;
            width = fields.size();
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw IngestError("malformed row: expected " + std::to_string(width) + " fields, found " +
                                  std::to_string(fields.size()),
                              line_no);
        }
        if (!label_idx && opts.label_column) {
            const auto it = std::find(header.begin(), header.end(), *opts.label_column);
            if (it != header.end()) {
                label_idx = static_cast<std::size_t>(it - header.begin());
            } else if (const auto v = parse_double(*opts.label_column);
                       v && *v >= 0 && std::floor(*v) == *v && *v < static_cast<double>(width)) {
                label_idx = static_cast<std::size_t>(*v);
            } else {
                throw IngestError("label column '" + *opts.label_column + "' not found");
            }
        }
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto col = static_cast<long>(j + 1);
            if (detail::is_missing(fields[j])) {
                throw IngestError("missing value" + (header.empty() ? "" : " in '" + header[j] + "'"), line_no, col);
            }
            if (label_idx && j == *label_idx) {
                raw_labels.emplace_back(trim(fields[j]));
                continue;
            }
            const auto v = parse_double(fields[j]);
            if (!v || !std::isfinite(*v)) {
                throw IngestError("non-numeric value '" + std::string(trim(fields[j])) + "'" +
                                      (header.empty() ? "" : " in '" + header[j] + "'"),
                                  line_no, col);
            }
            values.push_back(*v);
        }
        ++rows;
    }
    if (rows == 0) throw IngestError("no data rows in '" + source + "'");

    const std::size_t d = width - (label_idx ? 1 : 0);
    if (d == 0) throw IngestError("no feature columns in '" + source + "'");
    ds.matrix = DataMatrix(rows, d, std::move(values));
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!label_idx || j != *label_idx) ds.feature_names.push_back(header[j]);
    }
    if (label_idx) ds.labels = detail::encode_labels(raw_labels, opts);
    if (!ds.provenance.ranges.empty() && ds.provenance.ranges.size() != d) ds.provenance.ranges.clear();
    return ds;
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open data file '" + path + "'");
    return load_csv(in, opts, path);
}

/// Per-feature (x - min) / (max - min); constant features become 0.
inline Dataset normalize_min_max(Dataset ds) {
    auto& m = ds.matrix;
    std::vector<FeatureRange> ranges(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double lo = m.rows() ? m(0, j) : 0.0;
        double hi = lo;
        for (std::size_t i = 1; i < m.rows(); ++i) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
        ranges[j] = {lo, hi};
        const double span = hi - lo;
        for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = span > 0.0 ? (m(i, j) - lo) / span : 0.0;
    }
    if (!ds.provenance.normalized) ds.provenance.ranges = std::move(ranges);
    ds.provenance.normalized = true;
    return ds;
}

/// Writes a dataset as CSV with a '#' provenance header; load_csv reads it
/// back bit-exactly. Labels go to a trailing "label" column.
inline void write_csv(const Dataset& ds, std::ostream& out) {
    out << "# bae-dataset 1\n";
    if (!ds.provenance.source.empty()) out << "# source " << ds.provenance.source << '\n';
    if (ds.provenance.normalized) out << "# normalized min-max\n";
    for (std::size_t j = 0; j < ds.provenance.ranges.size(); ++j) {
        out << "# range " << j << ' ' << to_text(ds.provenance.ranges[j].min) << ' '
            << to_text(ds.provenance.ranges[j].max) << '\n';
    }
    for (const auto& note : ds.provenance.notes) out << "# note " << note << '\n';
    for (std::size_t j = 0; j < ds.cols(); ++j) {
        out << (j ? "," : "") << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j));
    }
    if (ds.labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (std::size_t j = 0; j < ds.cols(); ++j) out << (j ? "," : "") << to_text(ds.matrix(i, j));
        if (ds.labels) out << ',' << (*ds.labels)[i];
        out << '\n';
    }
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write data file '" + path + "'");
    write_csv(ds, out);
}

/// Inliers: unit-variance Gaussian draws mapped to 0.5 + z / 12 and clipped to
/// [0.25, 0.75]^d (a +-3 sigma box). Outliers: uniform over [0, 1]^d. Rows are
/// shuffled so labels carry no positional signal.
inline Dataset make_synthetic(std::size_t n_inliers, std::size_t n_outliers, std::size_t d, std::uint64_t seed) {
    if (n_inliers < 1 || n_outliers < 1 || d < 1) {
        throw ConfigError("make_synthetic: inlier count, outlier count and dimension must be >= 1");
    }
    const std::size_t n = n_inliers + n_outliers;
    Rng rng(derive_seed(seed, Stream::Synthetic, 0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);

    Dataset ds;
    ds.matrix = DataMatrix(n, d);
    ds.labels = Labels(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t row = order[k];
        const bool outlier = k >= n_inliers;
        (*ds.labels)[row] = outlier ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            ds.matrix(row, j) = outlier ? uniform01(rng) : std::clamp(0.5 + standard_normal(rng) / 12.0, 0.25, 0.75);
        }
    }
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    ds.provenance.source = "synthetic(inliers=" + std::to_string(n_inliers) + ",outliers=" +
                           std::to_string(n_outliers) + ",d=" + std::to_string(d) + ",seed=" +
                           std::to_string(seed) + ")";
    return ds;
}

/// Outliers to keep for `target_fraction` given `inliers`: round(f * I / (1 - f)),
/// at least 1.
inline std::size_t downsampled_outlier_count(std::size_t inliers, double target_fraction) {
    const double k = target_fraction * static_cast<double>(inliers) / (1.0 - target_fraction);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(k)));
}

/// Keeps every inlier and a seeded uniform subset of the outliers so that the
/// outlier fraction hits `target_fraction` within one instance. Row order is
/// preserved.
inline Dataset downsample_outliers(const Dataset& ds, double target_fraction, std::uint64_t seed) {
    if (!ds.labels) throw InputError("downsample_outliers: dataset has no labels");
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
        throw ConfigError("downsample_outliers: target fraction must lie in (0, 1)");
    }
    const double current = ds.outlier_fraction();
    Dataset out = ds;
    const std::string note = "downsampled outliers to fraction " + to_text(target_fraction) + " seed " +
                             std::to_string(seed);
    if (std::abs(target_fraction - current) <= 1e-12) {
        out.provenance.notes.push_back(note);
        return out;
    }
    if (target_fraction > current) {
        throw InputError("downsample_outliers: target fraction exceeds current outlier fraction " + to_text(current));
    }

    std::vector<std::size_t> outlier_rows;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        if ((*ds.labels)[i] == 1) outlier_rows.push_back(i);
    }
    const std::size_t inliers = ds.rows() - outlier_rows.size();
    const std::size_t keep = std::min(downsampled_outlier_count(inliers, target_fraction), outlier_rows.size());
    Rng rng(derive_seed(seed, Stream::Downsample, 0));
    shuffle(std::span<std::size_t>(outlier_rows), rng);
    std::vector<bool> kept(ds.rows(), true);
    for (std::size_t k = keep; k < outlier_rows.size(); ++k) kept[outlier_rows[k]] = false;

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (kept[i]) rows.push_back(i);
    }
    out.matrix = ds.matrix.select_rows(rows);
    Labels labels;
    for (std::size_t i : rows) labels.push_back((*ds.labels)[i]);
    out.labels = std::move(labels);
    out.provenance.notes.push_back(note);
    return out;
}

}  // namespace bae
