#include "ctf/models/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ctf/ir/error.hpp"

namespace ctf::models {

std::vector<std::vector<double>> read_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": not a number: " + tok);
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void write_matrix(std::ostream& out, const std::vector<std::vector<double>>& rows) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << '\n';
  }
}

std::vector<std::vector<double>> read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return read_matrix(in);
}

void write_matrix_file(const std::string& path, const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  write_matrix(out, rows);
}

}  // namespace ctf::models
