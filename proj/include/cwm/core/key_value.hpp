#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwm/core/error.hpp"

namespace cwm {

/// Ordered `key = value` document. Lines starting with '#' are comments.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string line = trim(text.substr(pos, eol - pos));
    ++line_no;
    pos = eol + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::kSyntax, "line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw Error(Errc::kSyntax, "line " + std::to_string(line_no) + ": empty key");
    }
    out[std::move(key)] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

inline std::string format_key_values(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

/// "llm.endpoint" -> "CWMDT_LLM_ENDPOINT".
inline std::string env_name_for(std::string_view key, std::string_view prefix = "CWMDT_") {
  std::string out(prefix);
  for (char c : key) {
    out.push_back(c == '.' || c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

/// Environment variables override (or supply) each listed key.
inline void apply_env_overrides(KeyValues& values, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    if (const char* env = std::getenv(env_name_for(key).c_str()); env != nullptr) {
      values[key] = env;
    }
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::kIo, "short write to " + path);
}

template <class T>
T parse_number(std::string_view key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw Error(Errc::kConfig, std::string(key) + ": not a number: '" + value + "'");
  }
  return out;
}

}  // namespace cwm
