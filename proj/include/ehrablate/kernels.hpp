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
// Low-level vector kernels used by the classifier inner loops. A scalar
// reference implementation always exists; AVX2 (x86-64) and NEON (aarch64)
// variants are selected at runtime when the CPU supports them. All variants
// reduce in a fixed lane order, so results are deterministic per variant,
// but variants may differ from scalar by floating-point summation order.

#ifndef EHRABLATE_KERNELS_HPP_
#define EHRABLATE_KERNELS_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ehrablate::kernels {

struct Kernels {
  const char* name;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, size_t n);
  // x[i] *= a
  void (*scale)(double a, double* x, size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, size_t n);
  // sum_j v[idx[j]]  (sparse row dot against a dense vector of ones-weights)
  double (*gather_sum)(const double* v, const uint32_t* idx, size_t n);
};

const Kernels& scalar();

// Every variant the current CPU can run, scalar first.
std::vector<const Kernels*> available();

// Active variant. Resolution order: explicit set_active() call, else the
// EHRABLATE_KERNELS environment variable (scalar|avx2|neon|auto), else the
// widest variant the CPU supports.
const Kernels& active();

// Returns false if the named variant is unknown or unsupported on this CPU.
// "auto" re-enables default selection.
bool set_active(std::string_view name);

}  // namespace ehrablate::kernels

#endif  // EHRABLATE_KERNELS_HPP_
