#include "scmpc/rng.hpp"

#include <cmath>
#include <numbers>

namespace scmpc {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(const StreamKey& key) {
  std::uint64_t h = mix64(key.master_seed ^ 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ key.trial);
  h = mix64(h ^ key.step);
  h = mix64(h ^ key.index);
  h = mix64(h ^ static_cast<std::uint64_t>(key.purpose));
  return h;
}

double RandomStream::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double low, double high) {
  return low + (high - low) * uniform01();
}

double RandomStream::gaussian(double mean, double stddev) {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace scmpc
