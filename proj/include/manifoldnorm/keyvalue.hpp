#pragma once

// Flat "key = value" text used for configs, reports and saved models.
// '#' starts a comment; blank lines are ignored; keys keep file order.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "manifoldnorm/error.hpp"

namespace manifoldnorm {

namespace kv_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace kv_detail

/// Shortest text that reads back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(what + ": '" + text + "' is not a number");
  }
  return v;
}

inline std::int64_t parse_int(const std::string& text, const std::string& what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(what + ": '" + text + "' is not an integer");
  }
  return v;
}

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(kv_detail::trim(item));
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  if (kv_detail::trim(text).empty()) return out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item, what));
  return out;
}

class KeyValue {
 public:
  static KeyValue parse(const std::string& text, const std::string& source = "<text>") {
    KeyValue kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = kv_detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw FormatError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key = kv_detail::trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw FormatError(source + ":" + std::to_string(lineno) + ": empty key");
      if (kv.has(key)) throw FormatError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      kv.set(key, kv_detail::trim(std::string_view(t).substr(eq + 1)));
    }
    return kv;
  }

  static KeyValue load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << str();
    if (!out) throw ValidationError("write failed: " + path);
  }

  bool has(const std::string& key) const { return index_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (auto it = index_.find(key); it != index_.end()) {
      entries_[it->second].second = value;
      return;
    }
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }

  const std::string& get(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) throw ValidationError("missing key '" + key + "'");
    return entries_[it->second].second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace manifoldnorm
