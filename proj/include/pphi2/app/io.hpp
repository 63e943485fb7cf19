#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "pphi2/core/error.hpp"

namespace pphi2::app {

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw numerical_error("HashFailed", "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// CSV with 17 significant digits and RFC 4180 quoting
class CsvWriter {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != cols_) throw validation_error("BadParams", "CSV row has the wrong number of cells");
    std::vector<std::string> s;
    for (const auto& c : cells) s.push_back(format(c));
    row_strings(s);
  }

  const std::string& str() const { return text_; }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

  static std::string format(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", *d);
      return buf;
    }
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

 private:
  std::size_t cols_;
  std::string text_;

  void row_strings(const std::vector<std::string>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) text_ += ',';
      text_ += quote(s[i]);
    }
    text_ += "\r\n";
  }
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw validation_error("OutputUnwritable", "cannot write " + p.string(), "output.dir");
  f << content;
  if (!f) throw validation_error("OutputUnwritable", "failed writing " + p.string(), "output.dir");
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_file(p, j.dump(2) + "\n"); }

}  // namespace pphi2::app
