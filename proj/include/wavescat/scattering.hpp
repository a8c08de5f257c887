#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "wavescat/wavelet_engine.hpp"

namespace wavescat {

enum class TransformKind { kMel, kTime, kJoint };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& s);

struct ScatteringConfig {
  int q_factor = 8;
  double t_scale = 1024.0;  // samples; rounded to the nearest power of two
  double f_octaves = 2.0;   // joint kind only
  int oversampling = 1;
  TransformKind kind = TransformKind::kMel;
  bool transposition_invariant = false;
  double log_epsilon = 0.0;  // 0 selects 1e-6 x median nonzero s1
  int n_threads = 1;
  Boundary boundary = Boundary::kReflect;

  void validate() const;
  double t_effective() const;  // power-of-two rounded T
};

// One second-order coefficient channel.  For the time kind ell/spin are
// unused; for the joint kind lambda_index addresses the uniform rows.
struct PathKey {
  int lambda_index = -1;
  int mu_index = -1;
  int ell = 0;
  int spin = 0;
};

// Paths of the lambda-axis scattering used by the transposition-invariant
// first order: ell_fr == kEllLowpass is the phi_F row.
struct FrPathKey {
  int ell_fr = 0;
  int lambda_index = -1;
};

struct ScatteringOutput {
  ScatteringConfig config;
  std::size_t frame_step = 1;
  std::size_t n_frames = 0;
  std::size_t n_uniform = 0;

  std::vector<std::vector<double>> s1;  // [lambda][frame]
  std::vector<double> s1_lambdas;       // log2 center, original-rate units
  std::vector<std::vector<double>> s2;  // [path][frame]
  std::vector<PathKey> s2_paths;
  std::vector<double> mu_log_freqs;   // per mu index, original-rate units
  std::vector<double> quefrencies;    // per joint ell offset, cycles/octave

  // Filled by transposition_invariant in place of plain s1 rows.
  std::vector<std::vector<double>> s1_fr;
  std::vector<FrPathKey> s1_fr_paths;

  std::size_t coefficient_count() const;
  double norm_sq() const;
  bool same_shape(const ScatteringOutput& other) const;
};

// Structure shared between the plain transforms and the gradient code: one
// place decides grids, banks, steps and path sets.
struct TransformPlan {
  ScatteringConfig cfg;
  double t_eff = 0.0;
  GridLayout layout;
  FilterBank first;
  std::size_t step1 = 1;
  FilterBank second;                       // time / joint kinds
  FrequencyBank freq;                      // joint kind
  std::vector<JointWavelet> joint;         // joint kind, flat G_1..G_L order
  std::vector<std::size_t> mu_steps;       // abs step per second-order mu
  std::vector<std::pair<std::size_t, std::size_t>> time_paths;  // (row, mu)
  std::size_t n_uniform = 0;
};

TransformPlan build_transform_plan(const ScatteringConfig& cfg,
                                   std::size_t signal_len);

ScatteringOutput scattering_transform(const Signal& x,
                                      const ScatteringConfig& cfg);
ScatteringOutput mel_spectrogram(const Signal& x, const ScatteringConfig& cfg);
ScatteringOutput time_scattering(const Signal& x, const ScatteringConfig& cfg);
ScatteringOutput joint_scattering(const Signal& x,
                                  const ScatteringConfig& cfg);

// Entry point for scalograms modified after the first modulus (chirp
// experiments): X must come from the same config's first-order bank.
ScatteringOutput scattering_from_scalogram(const Scalogram& X,
                                           const ScatteringConfig& cfg);

// Scattering along the log-frequency axis for s1 (with optional final
// averaging) and phi_F averaging of s2 along lambda.
ScatteringOutput transposition_invariant(const ScatteringOutput& out,
                                         const ScatteringConfig& cfg,
                                         bool average_s1 = true);

ScatteringOutput log_scattering(const ScatteringOutput& out);

double relative_distance(const ScatteringOutput& a, const ScatteringOutput& b);

}  // namespace wavescat
