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

#include "ehrablate/kernels.hpp"

namespace ehrablate::kernels {
namespace {

double dot_scalar(const double* x, const double* y, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] *= a;
}

double sum_scalar(const double* x, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double gather_sum_scalar(const double* v, const uint32_t* idx, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += v[idx[i]];
  return acc;
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k = {"scalar",       dot_scalar, axpy_scalar,
                            scale_scalar,   sum_scalar, gather_sum_scalar};
  return k;
}

}  // namespace ehrablate::kernels
