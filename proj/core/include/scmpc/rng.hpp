#pragma once

#include <cstdint>
#include <random>

namespace scmpc {

/// What a derived random stream is used for. The numeric value enters the
/// seed mixing, so distinct purposes never share a stream.
enum class StreamPurpose : std::uint64_t {
  kScenario = 1,     // one scenario draw of the multisample omega_t
  kTrueTheta = 2,    // the plant's actual parameter in a closed-loop trial
  kTrueGamma = 3,    // the plant's actual disturbance sequence
  kReliability = 4,  // fresh draws for reliability estimation
  kFuzz = 5,         // test and validation instances
};

/// Identifies a stream: master seed, trial, time step, index within the step.
struct StreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t step = 0;
  std::uint64_t index = 0;
  StreamPurpose purpose = StreamPurpose::kScenario;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of a derived stream. Each key field is folded in with mix64:
///   h = mix64(master ^ C0); h = mix64(h ^ trial); h = mix64(h ^ step);
///   h = mix64(h ^ index);   h = mix64(h ^ purpose)
/// with C0 = 0x9e3779b97f4a7c15. Distinct keys give unrelated seeds.
std::uint64_t derive_seed(const StreamKey& key);

/// Single-owner random stream on top of std::mt19937_64.
///
/// Uniforms take the top 53 bits of one engine output, so uniform01() lies in
/// [0, 1) on the grid k * 2^-53. Gaussians use the Box-Muller cosine branch
/// on two fresh uniforms, u1 mapped to (0, 1] to keep the log finite; the
/// sine partner is discarded so every gaussian consumes exactly two engine
/// outputs. Outputs are bit-identical across runs of the same build.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  explicit RandomStream(const StreamKey& key) : engine_(derive_seed(key)) {}

  double uniform01();
  double uniform(double low, double high);
  double gaussian(double mean, double stddev);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace scmpc
