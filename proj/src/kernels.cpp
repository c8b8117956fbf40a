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

#include <atomic>
#include <cstdlib>

#include "kernels_internal.hpp"

namespace ehrablate::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* find(std::string_view name) {
  if (name == "scalar") return &scalar();
  if (name == "avx2" && cpu_has_avx2()) return avx2_kernels();
  if (name == "neon") return neon_kernels();
  return nullptr;
}

const Kernels* default_variant() {
  if (const char* env = std::getenv("EHRABLATE_KERNELS")) {
    std::string_view requested(env);
    if (!requested.empty() && requested != "auto") {
      if (const Kernels* k = find(requested)) return k;
      // Unknown or unsupported request in the environment falls back to
      // auto selection rather than failing a whole run.
    }
  }
  if (cpu_has_avx2()) return avx2_kernels();
  if (const Kernels* k = neon_kernels()) return k;
  return &scalar();
}

std::atomic<const Kernels*> g_active{nullptr};

}  // namespace

std::vector<const Kernels*> available() {
  std::vector<const Kernels*> out{&scalar()};
  if (cpu_has_avx2()) out.push_back(avx2_kernels());
  if (const Kernels* k = neon_kernels()) out.push_back(k);
  return out;
}

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (!k) {
    k = default_variant();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

bool set_active(std::string_view name) {
  if (name == "auto") {
    g_active.store(default_variant(), std::memory_order_release);
    return true;
  }
  const Kernels* k = find(name);
  if (!k) return false;
  g_active.store(k, std::memory_order_release);
  return true;
}

}  // namespace ehrablate::kernels
