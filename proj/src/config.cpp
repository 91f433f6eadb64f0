#include "glsm/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "glsm/error.hpp"
#include "glsm/table_io.hpp"

namespace glsm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    c.values_[key] = unquote(trim(t.substr(eq + 1)));
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

std::optional<std::string> Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

std::string Config::require(const std::string& key) const {
  const auto v = find(key);
  if (!v) throw InvalidArgument("missing config key: " + key);
  return *v;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const double d = std::stod(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not a number: " + *v);
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument(key);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not an integer: " + *v);
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(*v, &pos);
    if (pos != v->size() || (!v->empty() && (*v)[0] == '-')) throw std::invalid_argument(key);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("config key " + key + " is not a non-negative integer: " + *v);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw InvalidArgument("config key " + key + " is not a boolean: " + *v);
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  std::string text = *v;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::stringstream ss(text);
  std::string item;
  while (ss >> item) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw InvalidArgument("config key " + key + " has a non-numeric entry: " + item);
  }
  return out;
}

std::map<std::string, std::string> Config::section(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_)
    if (k.compare(0, p.size(), p) == 0) out[k.substr(p.size())] = v;
  return out;
}

void Config::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace glsm
