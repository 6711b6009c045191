#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "embalance/types.hpp"

namespace embalance::csv {

/// Shortest round-trippable text for a double (17 significant digits).
std::string format(double value);

void write_row(std::ostream& os, const std::vector<std::string>& fields);
void write_row(std::ostream& os, const std::vector<double>& values);

/// Dense row-major matrix, with an optional header row.
void write_matrix(std::ostream& os, const Mat& m, const std::vector<std::string>& header = {});

/// Opens `path` for binary writing (LF endings), creating parent directories.
std::ofstream open(const std::filesystem::path& path);

Mat read_matrix(std::istream& is, bool has_header);

}  // namespace embalance::csv
