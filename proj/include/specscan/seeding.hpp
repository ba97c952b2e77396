// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace specscan {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, used to turn a purpose label into a seed-stream tag.
constexpr std::uint64_t tag64(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for item `index` of stream `seed`. Every random draw in the
/// toolkit goes through this, so any sub-result can be regenerated on its own.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose,
                                    std::uint64_t index = 0) noexcept {
  return derive_seed(derive_seed(seed, tag64(purpose)), index);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

// Runs fn(i) for i in [0, count) on up to `workers` threads. Items are
// assigned in contiguous blocks; fn must only write to slot i of its output.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t n_threads = std::min<std::size_t>(workers, count);
  const std::size_t block = (count + n_threads - 1) / n_threads;
  std::vector<std::exception_ptr> failures(n_threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t lo = t * block;
      const std::size_t hi = std::min(count, lo + block);
      if (lo >= hi) break;
      pool.emplace_back([lo, hi, t, &fn, &failures] {
        try {
          for (std::size_t i = lo; i < hi; ++i) fn(i);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
  }
  // Lowest block wins so the reported error does not depend on timing.
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace specscan
