#include "embalance/textfmt.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "embalance/errors.hpp"

namespace embalance::textfmt {
namespace {

std::string trim(const std::string& s) {
  auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); });
  return b < e.base() ? std::string(b, e.base()) : std::string();
}

}  // namespace

Document parse(std::istream& is) {
  Document doc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    // Bracketed lists may continue over several lines.
    if (!value.empty() && value.front() == '[') {
      while (value.find(']') == std::string::npos) {
        std::string more;
        if (!std::getline(is, more)) throw ConfigError("unterminated list for key '" + key + "'");
        ++lineno;
        if (auto hash = more.find('#'); hash != std::string::npos) more.erase(hash);
        value += " " + trim(more);
      }
    }
    if (doc.count(key)) throw ConfigError("duplicate key '" + key + "'");
    doc[key] = value;
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return parse(is);
}

void write(std::ostream& os, const Document& doc) {
  for (const auto& [k, v] : doc) os << k << " = " << v << '\n';
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("key '" + key + "': '" + value + "' is not a number");
  return out;
}

long long to_int(const std::string& key, const std::string& value) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("key '" + key + "': '" + value + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']')
    throw ConfigError("key '" + key + "': expected a bracketed list");
  std::vector<double> out;
  std::string body = value.substr(1, value.size() - 2);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    std::string item = trim(body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (!item.empty()) out.push_back(to_double(key, item));
    else if (comma != std::string::npos) throw ConfigError("key '" + key + "': empty list item");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string from_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string from_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += from_double(v[i]);
  }
  return out + "]";
}

}  // namespace embalance::textfmt
