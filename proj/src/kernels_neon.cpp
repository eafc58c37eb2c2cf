#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace convrough::kernels::neon {

void twisted_update(double* state, const double* decay, const double* add, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t s = vld1q_f64(state + i);
    float64x2_t d = vld1q_f64(decay + i);
    float64x2_t a = vld1q_f64(add + i);
    vst1q_f64(state + i, vaddq_f64(vmulq_f64(d, s), a));
  }
  for (; i < n; ++i) state[i] = decay[i] * state[i] + add[i];
}

double max_ratio(const double* num, const double* den, std::size_t n) {
  float64x2_t best = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) best = vmaxq_f64(best, vdivq_f64(vld1q_f64(num + i), vld1q_f64(den + i)));
  double out = vmaxvq_f64(best);
  for (; i < n; ++i) {
    double r = num[i] / den[i];
    if (r > out) out = r;
  }
  return out;
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_abs_sum(const double* w, const double* v, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(w + i), vabsq_f64(vld1q_f64(v + i))));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * std::abs(v[i]);
  return s;
}

}  // namespace convrough::kernels::neon

#endif
