#include "daugs/rng.hpp"

#include <cmath>
#include <numbers>

namespace daugs {
namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ (k + 0x9E3779B97F4A7C15ULL));
  return h;
}

Rng::Rng(std::uint64_t key) {
  std::uint64_t x = key;
  for (auto& s : s_) {
    s = splitmix64(x);
    x += 0x9E3779B97F4A7C15ULL;
  }
}

Rng Rng::stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix_seed(seed, {static_cast<std::uint64_t>(tag)});
  for (auto k : keys) h = splitmix64(h ^ (k + 0x9E3779B97F4A7C15ULL));
  return Rng(h);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

double Rng::normal(double mean, double sd) {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace daugs
