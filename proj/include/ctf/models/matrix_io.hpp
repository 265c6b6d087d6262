#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctf::models {

/// Plain text matrices: one row per line, numbers separated by spaces.
/// Blank lines are skipped. Throws ParseError on malformed input.
std::vector<std::vector<double>> read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const std::vector<std::vector<double>>& rows);

std::vector<std::vector<double>> read_matrix_file(const std::string& path);
void write_matrix_file(const std::string& path, const std::vector<std::vector<double>>& rows);

}  // namespace ctf::models
