#include "etm/common.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>

namespace etm {

namespace {
std::atomic<bool> g_serial{false};
}

void set_serial_mode(bool serial) { g_serial.store(serial); }
bool serial_mode() { return g_serial.load(); }

int worker_count() {
  if (g_serial.load()) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("ORBIT_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1 && cap < n) n = cap;
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  int workers = worker_count();
  if (workers <= 1 || n < 64) {
    body(0, n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mx;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi]() {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mx);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace etm
