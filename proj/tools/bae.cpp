#include "bae/cli.hpp"

int main(int argc, char** argv) { return bae::cli::main(argc, argv); }
