#pragma once

// Text formats: TNSR3 coordinate tensors and matrix CSV files.
//
// TNSR3: first non-comment line "TNSR3 n J K", then "i j k value" lines
// with 1-based indices. '#' starts a comment. Missing entries are zero and
// repeated coordinates are rejected.
//
// Matrix CSV: "rows,cols" then one comma-separated row per line. Values are
// written in shortest round-trip form so reading them back is bit-exact.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>
#include <type_traits>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/tensor.hpp"

namespace tnoodl {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string_view strip_comment(std::string_view s) {
  const auto pos = s.find('#');
  return pos == std::string_view::npos ? s : s.substr(0, pos);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (s.front() == '+') s.remove_prefix(1);
  }
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(concat("cannot open ", path.string(), " for reading"));
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(concat("cannot open ", path.string(), " for writing"));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// TNSR3

inline DenseTensor3 parse_tnsr3(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  DenseTensor3 z;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;

  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    const auto tok = detail::split_ws(body);
    if (!have_header) {
      std::size_t n = 0, J = 0, K = 0;
      if (tok.size() != 4 || tok[0] != "TNSR3" || !detail::parse_number(tok[1], n) ||
          !detail::parse_number(tok[2], J) || !detail::parse_number(tok[3], K) || n == 0 ||
          J == 0 || K == 0)
        throw ParseError(detail::concat("TNSR3 line ", line_no,
                                        ": expected header 'TNSR3 <n> <J> <K>'"),
                         line_no);
      z = DenseTensor3(n, J, K);
      have_header = true;
      continue;
    }
    std::size_t i = 0, j = 0, k = 0;
    double v = 0.0;
    if (tok.size() != 4 || !detail::parse_number(tok[0], i) || !detail::parse_number(tok[1], j) ||
        !detail::parse_number(tok[2], k) || !detail::parse_number(tok[3], v) || !std::isfinite(v))
      throw ParseError(detail::concat("TNSR3 line ", line_no, ": expected '<i> <j> <k> <value>'"),
                       line_no);
    if (i < 1 || i > z.n() || j < 1 || j > z.J() || k < 1 || k > z.K())
      throw ParseError(detail::concat("TNSR3 line ", line_no, ": index (", i, ", ", j, ", ", k,
                                      ") out of range"),
                       line_no);
    if (!seen.emplace(i, j, k).second)
      throw ParseError(detail::concat("TNSR3 line ", line_no, ": duplicate coordinate (", i,
                                      ", ", j, ", ", k, ")"),
                       line_no);
    z(i - 1, j - 1, k - 1) = v;
  }
  if (!have_header) throw ParseError("TNSR3: missing header", line_no);
  return z;
}

inline DenseTensor3 ingest_tensor(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return parse_tnsr3(in);
  } catch (const ParseError& e) {
    throw ParseError(detail::concat(path.string(), ": ", e.what()), e.line());
  }
}

inline void write_tnsr3(std::ostream& out, const DenseTensor3& z) {
  out << "TNSR3 " << z.n() << ' ' << z.J() << ' ' << z.K() << '\n';
  for (std::size_t k = 0; k < z.K(); ++k)
    for (std::size_t j = 0; j < z.J(); ++j)
      for (std::size_t i = 0; i < z.n(); ++i)
        if (z(i, j, k) != 0.0)
          out << i + 1 << ' ' << j + 1 << ' ' << k + 1 << ' ' << format_double(z(i, j, k)) << '\n';
}

// ---------------------------------------------------------------------------
// Matrix CSV

inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << m.rows() << ',' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = detail::open_out(path);
  write_matrix_csv(out, m);
  if (!out) throw Error(detail::concat("write failed: ", path.string()));
}

inline Matrix parse_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto split_commas = [](std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
      if (i == s.size() || s[i] == ',') {
        out.push_back(s.substr(start, i - start));
        start = i + 1;
      }
    return out;
  };

  std::size_t rows = 0, cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  {
    const auto tok = split_commas(detail::trim(line));
    if (tok.size() != 2 || !detail::parse_number(tok[0], rows) ||
        !detail::parse_number(tok[1], cols))
      throw ParseError(detail::concat("matrix CSV line ", line_no, ": expected 'rows,cols'"),
                       line_no);
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw ParseError(detail::concat("matrix CSV: expected ", rows, " rows, got ", i), line_no);
    ++line_no;
    const auto body = detail::trim(line);
    const auto tok = cols == 0 && body.empty() ? std::vector<std::string_view>{}
                                                : split_commas(body);
    if (tok.size() != cols)
      throw ParseError(detail::concat("matrix CSV line ", line_no, ": expected ", cols,
                                      " values, got ", tok.size()),
                       line_no);
    for (std::size_t j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!detail::parse_number(tok[j], v) || !std::isfinite(v))
        throw ParseError(detail::concat("matrix CSV line ", line_no, ": bad value '",
                                        tok[j], "'"),
                         line_no);
      m(i, j) = v;
    }
  }
  return m;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return parse_matrix_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(detail::concat(path.string(), ": ", e.what()), e.line());
  }
}

}  // namespace tnoodl
