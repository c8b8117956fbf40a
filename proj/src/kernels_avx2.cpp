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
// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64; callers must check CPU support before use
// (kernels.cpp does, via __builtin_cpu_supports).

#include "kernels_internal.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

namespace ehrablate::kernels {
namespace {

// Fixed reduction order: (l0 + l1) + (l2 + l3).
inline double hsum256(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  double l0 = _mm_cvtsd_f64(lo);
  double l1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  double l2 = _mm_cvtsd_f64(hi);
  double l3 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
  return (l0 + l1) + (l2 + l3);
}

double dot_avx2(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double out = hsum256(acc);
  for (; i < n; ++i) out += x[i] * y[i];
  return out;
}

void axpy_avx2(double a, const double* x, double* y, size_t n) {
  __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, size_t n) {
  __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double sum_avx2(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  }
  double out = hsum256(acc);
  for (; i < n; ++i) out += x[i];
  return out;
}

double gather_sum_avx2(const double* v, const uint32_t* idx, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + i));
    acc = _mm256_add_pd(acc, _mm256_i32gather_pd(v, vi, 8));
  }
  double out = hsum256(acc);
  for (; i < n; ++i) out += v[idx[i]];
  return out;
}

}  // namespace

const Kernels* avx2_kernels() {
  static const Kernels k = {"avx2",     dot_avx2, axpy_avx2,
                            scale_avx2, sum_avx2, gather_sum_avx2};
  return &k;
}

}  // namespace ehrablate::kernels

#else

namespace ehrablate::kernels {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace ehrablate::kernels

#endif
