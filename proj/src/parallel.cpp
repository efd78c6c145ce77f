#include "hho/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hho {

namespace {

std::atomic<unsigned> g_override{0};

unsigned env_threads() {
  static const unsigned value = [] {
    const char* env = std::getenv("HHO_THREADS");
    if (env == nullptr) return 0u;
    try {
      const long v = std::stol(env);
      return v > 0 ? static_cast<unsigned>(v) : 0u;
    } catch (...) {
      return 0u;
    }
  }();
  return value;
}

}  // namespace

unsigned thread_count() {
  if (const unsigned o = g_override.load(); o != 0) return o;
  if (const unsigned e = env_threads(); e != 0) return e;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_thread_count(unsigned n) { g_override.store(n); }

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, unsigned)>& body,
                  bool static_chunks) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i, 0);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  if (static_chunks) {
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, w * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        guarded([&] {
          for (std::size_t i = begin; i < end; ++i) body(i, w);
        });
      });
    }
  } else {
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        guarded([&] {
          for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i, w);
        });
      });
    }
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace hho
