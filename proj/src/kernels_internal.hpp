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

#ifndef EHRABLATE_SRC_KERNELS_INTERNAL_HPP_
#define EHRABLATE_SRC_KERNELS_INTERNAL_HPP_

#include "ehrablate/kernels.hpp"

namespace ehrablate::kernels {

// Null when the variant is compiled out for this target.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

}  // namespace ehrablate::kernels

#endif  // EHRABLATE_SRC_KERNELS_INTERNAL_HPP_
