#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace plom {

struct CsvMatrix {
  Eigen::MatrixXd data;  // one realization per column
  std::vector<std::string> header;
};

// Files hold one realization per row unless transpose is set. A first line with any
// non-numeric field is taken as the header.
CsvMatrix read_csv(const std::string& path, bool transpose = false);
void write_csv(const std::string& path, const Eigen::MatrixXd& columns, const std::vector<std::string>& header = {});
void write_rows_csv(const std::string& path, const Eigen::MatrixXd& rows, const std::vector<std::string>& header = {});

// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::string file_digest(const std::string& path);  // fnv1a-64, hex

}  // namespace plom
