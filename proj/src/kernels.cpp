#include "convrough/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "convrough/errors.hpp"

namespace convrough::kernels {

namespace scalar {

void twisted_update(double* state, const double* decay, const double* add, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) state[i] = decay[i] * state[i] + add[i];
}

double max_ratio(const double* num, const double* den, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = num[i] / den[i];
    if (r > best) best = r;
  }
  return best;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_abs_sum(const double* w, const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * std::abs(v[i]);
  return s;
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void twisted_update(double* state, const double* decay, const double* add, std::size_t n);
double max_ratio(const double* num, const double* den, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double weighted_abs_sum(const double* w, const double* v, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void twisted_update(double* state, const double* decay, const double* add, std::size_t n);
double max_ratio(const double* num, const double* den, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double weighted_abs_sum(const double* w, const double* v, std::size_t n);
}  // namespace neon
#endif

namespace {

const Table kScalar{"scalar", scalar::twisted_update, scalar::max_ratio, scalar::dot, scalar::weighted_abs_sum};
#if defined(__x86_64__) || defined(_M_X64)
const Table kAvx2{"avx2", avx2::twisted_update, avx2::max_ratio, avx2::dot, avx2::weighted_abs_sum};
#endif
#if defined(__aarch64__)
const Table kNeon{"neon", neon::twisted_update, neon::max_ratio, neon::dot, neon::weighted_abs_sum};
#endif

const Table* by_name(const std::string& name) {
  if (name == "scalar") return &kScalar;
  if (name == "avx2") return avx2_table();
  if (name == "neon") return neon_table();
  return nullptr;
}

const Table* detect() {
  if (const char* env = std::getenv("CONVROUGH_KERNELS")) {
    if (const Table* t = by_name(env)) return t;
  }
  if (const Table* t = avx2_table()) return t;
  if (const Table* t = neon_table()) return t;
  return &kScalar;
}

std::atomic<const Table*> g_active{nullptr};

}  // namespace

const Table& scalar_table() { return kScalar; }

const Table* avx2_table() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) return &kAvx2;
#endif
  return nullptr;
}

const Table* neon_table() {
#if defined(__aarch64__)
  return &kNeon;
#else
  return nullptr;
#endif
}

const Table& active() {
  const Table* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = detect();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(const std::string& name) {
  const Table* t = by_name(name);
  if (!t) throw InvalidInput("kernel variant '" + name + "' is not available");
  g_active.store(t, std::memory_order_release);
}

std::size_t first_ratio_index(const double* num, const double* den, std::size_t n, double value) {
  for (std::size_t i = 0; i < n; ++i) {
    if (num[i] / den[i] == value) return i;
  }
  return n;
}

}  // namespace convrough::kernels
