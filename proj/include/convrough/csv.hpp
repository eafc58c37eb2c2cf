#pragma once

#include <string>
#include <vector>

namespace convrough {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Fixed column order, 17 significant digits, LF line endings.
void emit_csv(const Table& table, const std::string& path);
std::string format_double(double v);
Table read_csv(const std::string& path);

}  // namespace convrough
