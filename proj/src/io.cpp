#include "plom/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "plom/error.hpp"
#include "plom/rng.hpp"

namespace plom {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::string join_header(const std::vector<std::string>& header) {
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) s.push_back(',');
    s += header[i];
  }
  s.push_back('\n');
  return s;
}

}  // namespace

CsvMatrix read_csv(const std::string& path, bool transpose) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  CsvMatrix out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto fields = split_fields(line);
    std::vector<double> vals(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse_double(fields[i], vals[i]);
    if (!numeric) {
      if (rows.empty() && out.header.empty()) {
        out.header = fields;
        continue;
      }
      throw Error(Errc::IoFailure, path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (!rows.empty() && vals.size() != rows[0].size())
      throw Error(Errc::IoFailure, path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(Errc::IoFailure, path + ": no data rows");
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size()), c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd file(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) file(i, j) = rows[i][j];
  out.data = transpose ? file : Eigen::MatrixXd(file.transpose());
  if (transpose && !out.header.empty()) out.header.clear();
  return out;
}

void write_rows_csv(const std::string& path, const Eigen::MatrixXd& rows, const std::vector<std::string>& header) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw Error(Errc::DimensionMismatch, "header width does not match the matrix");
  std::string s = header.empty() ? std::string() : join_header(header);
  s.reserve(s.size() + static_cast<std::size_t>(rows.size()) * 24);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) s.push_back(',');
      append_number(s, rows(i, j));
    }
    s.push_back('\n');
  }
  write_text_atomic(path, s);
}

void write_csv(const std::string& path, const Eigen::MatrixXd& columns, const std::vector<std::string>& header) {
  write_rows_csv(path, columns.transpose(), header);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp.string());
    out << content;
    if (!out) throw Error(Errc::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot rename into " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const std::string& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(read_text(path))));
  return buf;
}

}  // namespace plom
