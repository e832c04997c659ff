#include <atomic>
#include <cstdlib>
#include <cstring>

#include "qcd/kernels/kernels.hpp"

namespace qcd::kernels {

namespace {

std::atomic<const Backend*> g_forced{nullptr};

const Backend* detect() {
  const char* env = std::getenv("QCD_KERNEL");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_backend();
  if (env != nullptr && std::strcmp(env, "avx2") == 0 && avx2_backend() != nullptr)
    return avx2_backend();
  if (avx2_backend() != nullptr) return avx2_backend();
  return &scalar_backend();
}

}  // namespace

const Backend& active_backend() {
  const Backend* forced = g_forced.load(std::memory_order_acquire);
  if (forced != nullptr) return *forced;
  static const Backend* chosen = detect();
  return *chosen;
}

bool force_backend(const char* name) {
  if (name == nullptr) {
    g_forced.store(nullptr, std::memory_order_release);
    return true;
  }
  if (std::strcmp(name, "scalar") == 0) {
    g_forced.store(&scalar_backend(), std::memory_order_release);
    return true;
  }
  if (std::strcmp(name, "avx2") == 0 && avx2_backend() != nullptr) {
    g_forced.store(avx2_backend(), std::memory_order_release);
    return true;
  }
  return false;
}

}  // namespace qcd::kernels
