#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <cstdint>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace heatlaw {

// Process-wide cap on worker threads; 1 runs everything inline.
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{1};
  return cap;
}

inline void set_thread_cap(int n) { thread_cap() = std::max(1, n); }

// body(i) for i in [0, n); results must be written to per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::size_t(thread_cap().load()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Independent stream for chunk c of a draw seeded with seed.
inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::size_t c) {
  std::seed_seq ss{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(c), std::uint32_t(std::uint64_t(c) >> 32)};
  return std::mt19937_64(ss);
}

// n draws of one(rng) in chunks of 4096, each chunk on its own stream.
template <class One>
std::vector<double> chunked_draw(std::size_t n, std::uint64_t seed, One&& one) {
  constexpr std::size_t chunk = 4096;
  std::vector<double> out(n, 0.0);
  parallel_for((n + chunk - 1) / chunk, [&](std::size_t c) {
    auto rng = chunk_rng(seed, c);
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) out[i] = one(rng);
  });
  return out;
}

}  // namespace heatlaw
