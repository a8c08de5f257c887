#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavescat/scattering.hpp"

namespace wavescat {

// Gaussian noise shaped so its expected per-channel first-order coefficients
// match target.s1 (band powers spread uniformly over each wavelet's -3 dB
// passband).  Deterministic for a fixed seed.
Signal init_from_s1(const ScatteringOutput& target, std::size_t length,
                    std::uint64_t seed);

// E(y) = ||Phi y - Phi x||^2 and dE/dy via the adjoint-filter reverse pass.
struct GradientResult {
  double energy = 0.0;
  std::vector<double> grad;
};

GradientResult scattering_gradient(const Signal& y,
                                   const ScatteringOutput& target,
                                   const ScatteringConfig& cfg);

// E(y) alone (one plain forward transform).
double scattering_energy(const Signal& y, const ScatteringOutput& target);

// Descent state.  current/velocity are held in float32 so a checkpoint file
// written with float32 buffers restores the state exactly and a resumed run
// is bit-identical to an uninterrupted one.
struct SynthesisState {
  ScatteringConfig config;
  ScatteringOutput target;  // in memory only; rebuilt from the source on load
  std::vector<float> current;
  std::vector<float> velocity;
  double learning_rate = 0.0;
  double momentum_coeff = 0.9;
  double initial_error = 0.0;
  double last_error = 0.0;
  std::vector<double> error_history;  // E at init, then each accepted step
  std::uint64_t rng_seed = 0;
  std::size_t iteration = 0;
  bool diverged = false;

  Signal current_signal() const;
};

SynthesisState synthesize_init(const Signal& target_x,
                               const ScatteringConfig& cfg,
                               std::uint64_t seed);

// Runs `more_iters` gradient iterations with momentum and the bold-driver
// rate policy (grow 1.1 on decrease; shrink 0.5, revert and zero the
// velocity on increase).
SynthesisState resume(SynthesisState state, std::size_t more_iters);

// init + resume(max_iters): returns the final state (signal + history).
SynthesisState synthesize(const Signal& target_x, const ScatteringConfig& cfg,
                          std::size_t max_iters, std::uint64_t seed);

void save_checkpoint(const SynthesisState& state, const std::string& path);
// Loads everything but the target transform, which the caller re-attaches.
SynthesisState load_checkpoint(const std::string& path);

}  // namespace wavescat
