#pragma once

#include <cstddef>
#include <string>

namespace convrough::kernels {

// Hot loops with a scalar reference and vector variants picked at runtime.
// twisted_update and max_ratio are bit-identical across variants; dot and
// weighted_abs_sum reorder the reduction.
struct Table {
  const char* name;
  // state[i] = decay[i] * state[i] + add[i]
  void (*twisted_update)(double* state, const double* decay, const double* add, std::size_t n);
  // max_i num[i] / den[i], 0 for n == 0; den must be positive
  double (*max_ratio)(const double* num, const double* den, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i w[i] * |v[i]|
  double (*weighted_abs_sum)(const double* w, const double* v, std::size_t n);
};

const Table& scalar_table();
// nullptr when the variant is not compiled in or the CPU lacks it.
const Table* avx2_table();
const Table* neon_table();

// Best supported table, overridable with CONVROUGH_KERNELS=scalar|avx2|neon.
const Table& active();
// Force a table by name; throws InvalidInput if unavailable.
void select(const std::string& name);

std::size_t first_ratio_index(const double* num, const double* den, std::size_t n, double value);

}  // namespace convrough::kernels
