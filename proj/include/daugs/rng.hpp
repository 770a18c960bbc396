#pragma once

// Deterministic random streams.
//
// Generator: xoshiro256** whose 256-bit state is filled by four successive
// splitmix64 outputs of the stream key. A stream key is derived from the
// global seed and a list of integers (domain tag, case id, model id, ...)
// by chaining splitmix64:
//
//   h = splitmix64(seed); for k in keys: h = splitmix64(h ^ (k + 0x9E3779B97F4A7C15))
//
// Draws are computed without <random> distributions so that values are
// identical across standard libraries:
//   uniform()     = (next() >> 11) * 2^-53                 in [0, 1)
//   uniform_int() = lo + (next() % span), rejection-free only for small spans
//                   (bias below 2^-40 for spans < 2^24)
//   normal()      = Box-Muller on two uniform() draws, cosine branch only
//
// This mapping is frozen; golden files depend on it.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace daugs {

// Domain tags that keep sub-streams of different subsystems apart.
enum class StreamTag : std::uint64_t {
  Phantom = 1,
  PhantomNoise = 2,
  Shift = 3,
  PerturbModel = 4,
  PerturbPatch = 5,
  MoCo = 6,
  Pool = 7,
  Cohort = 8,
  Test = 99,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0);

  // Independent sub-stream for (seed, tag, keys...).
  static Rng stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys = {});

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t s_[4];
};

}  // namespace daugs
