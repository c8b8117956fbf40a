// Copyright 2026 The ehrablate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// NEON kernel variants for aarch64, where Advanced SIMD is baseline.

#include "kernels_internal.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace ehrablate::kernels {
namespace {

double dot_neon(const double* x, const double* y, size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double out = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) out += x[i] * y[i];
  return out;
}

void axpy_neon(double a, const double* x, double* y, size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, double* x, size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double sum_neon(const double* x, size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, vld1q_f64(x + i));
  }
  double out = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) out += x[i];
  return out;
}

double gather_sum_neon(const double* v, const uint32_t* idx, size_t n) {
  // No gather instruction on NEON; load lanes individually but keep the
  // same two-accumulator-lane reduction shape as the other kernels.
  float64x2_t acc = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t pair = {v[idx[i]], v[idx[i + 1]]};
    acc = vaddq_f64(acc, pair);
  }
  double out = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) out += v[idx[i]];
  return out;
}

}  // namespace

const Kernels* neon_kernels() {
  static const Kernels k = {"neon",     dot_neon, axpy_neon,
                            scale_neon, sum_neon, gather_sum_neon};
  return &k;
}

}  // namespace ehrablate::kernels

#else

namespace ehrablate::kernels {
const Kernels* neon_kernels() { return nullptr; }
}  // namespace ehrablate::kernels

#endif
