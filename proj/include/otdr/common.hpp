// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace otdr {

using real = double;

/// Thrown on contract violations (bad shapes, invalid arguments, malformed files).
class invalid_argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_argument_error(msg);
}

// Counter-based deterministic RNG (splitmix64 core). Streams derived from
// (seed, stream_id) are independent, so parallel producers stay reproducible
// regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  static Rng child(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed);
    std::uint64_t mixed = r.next_u64() ^ (stream * 0xbf58476d1ce4e5b9ull + 0x94d049bb133111ebull);
    return Rng(mixed ? mixed : 1);
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // index in [0, n)
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  // standard normal via Box-Muller (no cached spare, keeps the stream simple)
  double normal() {
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Static-partition parallel_for. Callers must only use it when iterations
// write to disjoint locations; the split is deterministic, so results are
// bit-identical for any worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

int worker_count();

// FNV-1a, used for config hashes recorded in artifacts.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace otdr
