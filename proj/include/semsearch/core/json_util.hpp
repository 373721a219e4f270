#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "semsearch/core/error.hpp"
#include "semsearch/core/grid.hpp"
#include "semsearch/core/rng.hpp"

namespace semsearch {

using nlohmann::json;

inline json to_json_cell(Cell c) { return json::array({c.x, c.y}); }

namespace detail {

inline std::string describe_path(const std::string& context, const std::string& key) {
  return context.empty() ? key : context + "." + key;
}

}  // namespace detail

/// Field access that reports the offending field path on failure.
template <class T>
T require(const json& j, const std::string& key, const std::string& context = {}) {
  const auto where = detail::describe_path(context, key);
  if (!j.is_object()) throw ParseError("field '" + context + "': expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field '" + where + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw ParseError("field '" + where + "': " + e.what());
  }
}

template <class T>
T optional_field(const json& j, const std::string& key, T fallback, const std::string& context = {}) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return require<T>(j, key, context);
}

inline const json& require_node(const json& j, const std::string& key, const std::string& context = {}) {
  if (!j.is_object()) throw ParseError("field '" + context + "': expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing field '" + detail::describe_path(context, key) + "'");
  return *it;
}

inline Cell require_cell(const json& j, const std::string& key, const std::string& context = {}) {
  const auto arr = require<std::vector<int>>(j, key, context);
  if (arr.size() != 2) {
    throw ParseError("field '" + detail::describe_path(context, key) + "': expected [x, y]");
  }
  return {arr[0], arr[1]};
}

/// Parses a JSON document, translating the byte offset of syntax errors
/// into a line number.
inline json parse_document(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size() && i < e.byte; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError(source + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace semsearch
