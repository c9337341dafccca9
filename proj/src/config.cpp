#include "nirens/config.hpp"

#include <charconv>
#include <sstream>

#include "nirens/error.hpp"
#include "nirens/io.hpp"

namespace nirens {

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = std::string(trim(body.substr(0, eq)));
    if (key.empty()) {
      throw UsageError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.values_[key] = std::string(trim(body.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return parse(text, path.string());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  double v = 0.0;
  if (!parse_double(it->second, v)) {
    throw UsageError(key + ": expected a number, got '" + it->second + "'");
  }
  return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  const auto text = trim(it->second);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(key + ": expected an integer, got '" + it->second + "'");
  }
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  const auto text = trim(it->second);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(key + ": expected a non-negative integer, got '" + it->second + "'");
  }
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  const auto& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "off" || v == "no") {
    return false;
  }
  throw UsageError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  std::vector<std::string> out;
  for (const auto& item : split(it->second, ',')) {
    const auto t = trim(item);
    if (!t.empty()) {
      out.emplace_back(t);
    }
  }
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + " = " + value + "\n";
  }
  return out;
}

}  // namespace nirens
