#include "bifrom/parallel.hpp"

namespace bifrom {
namespace {
std::atomic<int> g_threads{0};
}

int default_thread_count() {
  const int configured = g_threads.load();
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_thread_count(int threads) { g_threads.store(threads > 0 ? threads : 0); }

}  // namespace bifrom
