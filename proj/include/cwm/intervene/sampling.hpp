#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cwm/core/error.hpp"
#include "cwm/core/rng.hpp"
#include "cwm/intervene/propagate.hpp"

namespace cwm {

enum class Backend { kDeterministic, kService };

struct BackendConfig {
  Backend backend = Backend::kDeterministic;
  std::string endpoint;
  std::string token;
  double timeout_seconds = 30.0;
  /// Extra attempts after a transport failure or 5xx reply.
  int retry_budget = 2;
  int samples = 3;
  std::uint64_t seed = 0;
};

inline constexpr double kMaxHeadingPerturbation = std::numbers::pi / 6.0;
inline constexpr double kMinSpeedScale = 0.75;
inline constexpr double kMaxSpeedScale = 1.25;

struct Perturbation {
  double rotate = 0.0;
  double scale = 1.0;
};

/// Heading/speed draw for sample n >= 1; sample 0 is never perturbed.
inline Perturbation sample_perturbation(std::uint64_t seed, int n) {
  if (n <= 0) return {};
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
  Perturbation p;
  p.rotate = rng.uniform(-kMaxHeadingPerturbation, kMaxHeadingPerturbation);
  p.scale = rng.uniform(kMinSpeedScale, kMaxSpeedScale);
  return p;
}

/// N propagations. Samples 1..N-1 rotate and scale the target's
/// post-intervention velocity; requested velocities (SET_MOTION) are kept as
/// given.
inline std::vector<CounterfactualTwin> sample_trajectories(const TwinSequence& source, const Intervention& intervention,
                                                           int k, const BackendConfig& config,
                                                           const MotionMap& motion = {}) {
  if (config.samples < 1) throw Error(Errc::kInvalidParam, "sample count must be at least 1");
  std::vector<CounterfactualTwin> out;
  for (int n = 0; n < config.samples; ++n) {
    PropagateOptions options;
    options.motion = motion;
    if (intervention.kind != InterventionKind::kSetMotion) {
      const Perturbation p = sample_perturbation(config.seed, n);
      options.rotate = p.rotate;
      options.scale = p.scale;
    }
    CounterfactualTwin cf = propagate(source, intervention, k, options);
    cf.sample = n;
    cf.provenance = "deterministic seed=" + std::to_string(config.seed) + " sample=" + std::to_string(n);
    out.push_back(std::move(cf));
  }
  return out;
}

}  // namespace cwm
