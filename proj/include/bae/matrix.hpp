#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "bae/errors.hpp"

namespace bae {

/// Dense row-major n x d table of feature vectors.
class DataMatrix {
public:
    DataMatrix() = default;

    DataMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw ConfigError("DataMatrix: value count does not match rows*cols");
        }
    }

    static DataMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        DataMatrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw ConfigError("DataMatrix: ragged rows");
            std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    std::span<double> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * cols_, cols_};
    }

    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    const std::vector<double>& values() const noexcept { return values_; }

    /// Rows gathered by index (duplicates allowed).
    DataMatrix select_rows(std::span<const std::size_t> indices) const {
        DataMatrix out(indices.size(), cols_);
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const auto src = row(indices[k]);
            std::copy(src.begin(), src.end(), out.row(k).begin());
        }
        return out;
    }

    friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace bae
