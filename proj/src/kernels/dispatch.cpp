#include <atomic>
#include <cstdlib>
#include <string>

#include "kernel_tables.hpp"
#include "wavets/error.hpp"

namespace wavets::simd {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(WAVETS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(WAVETS_HAVE_NEON)
      return true;  // Advanced SIMD is mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& best_table() {
  if (const char* env = std::getenv("WAVETS_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == name(isa) && cpu_has(isa)) return table(isa);
    }
  }
  if (cpu_has(Isa::Avx2)) return table(Isa::Avx2);
  if (cpu_has(Isa::Neon)) return table(Isa::Neon);
  return scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) { return cpu_has(isa); }

const KernelTable& table(Isa isa) {
  if (!cpu_has(isa))
    throw ValidationError("kernel set '" + std::string(name(isa)) + "' is not available");
  switch (isa) {
#if defined(WAVETS_HAVE_AVX2)
    case Isa::Avx2:
      return detail::avx2_table();
#endif
#if defined(WAVETS_HAVE_NEON)
    case Isa::Neon:
      return detail::neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() {
  const KernelTable* current = g_active.load(std::memory_order_acquire);
  if (current == nullptr) {
    const KernelTable* chosen = &best_table();
    if (!g_active.compare_exchange_strong(current, chosen, std::memory_order_acq_rel))
      return *current;
    return *chosen;
  }
  return *current;
}

void select(Isa isa) { g_active.store(&table(isa), std::memory_order_release); }

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
    if (cpu_has(isa)) out.push_back(isa);
  return out;
}

}  // namespace wavets::simd
