#pragma once

#include "metadiv/numerics/matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace metadiv::numerics {

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

/// Headerless CSV of rows, one decimal double per cell.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Plain tabular CSV with a header row; cells are written verbatim.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv_table(const std::filesystem::path& path);
void write_csv_table(const std::filesystem::path& path, const CsvTable& table);

}  // namespace metadiv::numerics
