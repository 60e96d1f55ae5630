#include <atomic>
#include <cstdlib>
#include <string>

#include "cavparse/simd/kernels.hpp"

namespace cavparse::simd {

#if defined(CAVPARSE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(CAVPARSE_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

namespace {

bool host_supports(std::string_view name) {
  if (name == "scalar") return true;
#if defined(CAVPARSE_HAVE_AVX2)
  if (name == "avx2") {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
  }
#endif
#if defined(CAVPARSE_HAVE_NEON)
  if (name == "neon") return true;  // mandatory on AArch64
#endif
  return false;
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* table : available_kernels()) {
    if (name == table->name) return table;
  }
  return nullptr;
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("CAVPARSE_SIMD"); env && *env && std::string_view(env) != "auto") {
    if (const KernelTable* table = find(env)) return table;
  }
  return available_kernels().back();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_choice()};
  return table;
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(CAVPARSE_HAVE_AVX2)
  if (host_supports("avx2")) out.push_back(&avx2_kernels());
#endif
#if defined(CAVPARSE_HAVE_NEON)
  if (host_supports("neon")) out.push_back(&neon_kernels());
#endif
  return out;
}

const KernelTable& active_kernels() { return *current().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
  if (name == "auto") {
    current().store(available_kernels().back(), std::memory_order_release);
    return true;
  }
  const KernelTable* table = find(name);
  if (!table) return false;
  current().store(table, std::memory_order_release);
  return true;
}

}  // namespace cavparse::simd
