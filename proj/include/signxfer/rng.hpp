#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace signxfer {

// mt19937_64 with hand-rolled distributions. The standard distribution
// classes are implementation-defined, so drawing through them would make
// seeded corpora differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer in [lo, hi] inclusive.
  long int_range(long lo, long hi) {
    return lo + static_cast<long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller; one cached value per pair.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent deterministic stream for a sub-task.
  Rng substream(std::uint64_t salt) const;
  Rng substream(const std::string& tag) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace signxfer
