#pragma once

// Flat `key = value` structured text shared by experiment configs and model files.
//
//   # comment
//   model.preset = rc-ladder
//   sets.M = [-5, -0.5, -1, -0.1, 0.1, 0.5, 1, 5]
//
// Keys are dotted paths; values are scalars, bare words or bracketed lists.

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace embalance::textfmt {

using Document = std::map<std::string, std::string>;

Document parse(std::istream& is);
Document parse_file(const std::string& path);
void write(std::ostream& os, const Document& doc);

double to_double(const std::string& key, const std::string& value);
long long to_int(const std::string& key, const std::string& value);
bool to_bool(const std::string& key, const std::string& value);
std::vector<double> to_list(const std::string& key, const std::string& value);

std::string from_double(double v);
std::string from_list(const std::vector<double>& v);

}  // namespace embalance::textfmt
