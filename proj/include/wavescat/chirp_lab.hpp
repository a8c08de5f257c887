#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wavescat/scattering.hpp"

namespace wavescat {

// Exponential chirp x(t) = exp(2 pi i f_start/(a ln 2) * 2^(a t)) with
// instantaneous frequency f_start * 2^(a t) cycles/sample, a = alpha per
// sample.  alpha = 0 degenerates to a pure tone at f_start.
struct ChirpSpec {
  double alpha = 1.0;        // octaves per time unit
  std::size_t duration = 0;  // samples
  double time_unit = 1.0;    // samples per unit t
  double f_start = 0.0;      // cycles/sample at n = 0; 0 selects a safe sweep
  bool real_part = false;    // cosine phase instead of the analytic signal

  double alpha_per_sample() const { return alpha / time_unit; }
  double start_freq() const;
  double instantaneous_freq(double n) const;
};

Signal exponential_chirp(const ChirpSpec& spec);

// --- Lemma 1: |x * psi_lambda|(t) vs |psi^(f_inst(t))| -------------------

struct Lemma1Outcome {
  double lambda = 0.0;          // log2 center of the row actually used
  double max_abs_error = 0.0;   // max deviation over the evaluation window
  double bound_shape = 0.0;     // |alpha_s| / center_freq
  double bound = 0.0;           // fitted_c * bound_shape
};

// Deviation between the measured envelope of one channel and the closed-form
// ridge prediction, over times where the instantaneous frequency stays
// within two octaves of the channel.
Lemma1Outcome lemma1_check(const ChirpSpec& spec, const FilterBank& bank,
                           double lambda, double fitted_c = 0.0);

// Max observed error/shape ratio over a calibration sweep; fresh points are
// then tested against c * shape.
double fit_lemma1_constant(const FilterBank& bank,
                           const std::vector<ChirpSpec>& calibration,
                           const std::vector<double>& lambdas);

// --- Theorem 1: joint coefficients vs the ridge model ---------------------

struct Theorem1Point {
  std::size_t frame = 0;
  std::size_t lambda_row = 0;
  int mu_index = 0;
  int ell = 0;
  int spin = +1;
};

struct Theorem1Row {
  Theorem1Point point;
  double actual = 0.0;
  double predicted = 0.0;
  double residual = 0.0;
  double bound_shape = 0.0;
  double bound = 0.0;  // fitted_c * bound_shape (0 when no constant given)
};

// c0 = integral |psi^(2^u)| du for the first-order prototype, by quadrature.
double chirp_c0(const FilterBank& first_order);

std::vector<Theorem1Row> theorem1_check(const ChirpSpec& spec,
                                        const ScatteringConfig& cfg,
                                        const ScatteringOutput& out,
                                        const std::vector<Theorem1Point>& pts,
                                        double fitted_c = 0.0);

// --- ridge-based chirp rate estimation ------------------------------------

struct ChirpRateEstimate {
  double alpha_hat = 0.0;  // octaves per sample, signed
  int spin = 0;
  int mu_index = -1;
  int ell = 0;
};

// Argmax over the band-pass (mu, ell, s) coefficients at one (frame, lambda
// row).  Errors when the slice is all zero or the phi_F row dominates.
ChirpRateEstimate estimate_chirp_rate(const ScatteringOutput& out,
                                      std::size_t frame,
                                      std::size_t lambda_row);

// --- frequency-dependent time shifts --------------------------------------

// Circularly shifts each scalogram row by tau(lambda) samples (fractional
// shifts via a frequency-domain phase ramp).
Scalogram frequency_dependent_shift(
    const Scalogram& X, const std::function<double(double)>& tau);

// Per-column argmax regression of the scalogram ridge: fitted d lambda / dt
// in octaves per sample over the signal region.
double scalogram_ridge_slope(const Scalogram& X);

}  // namespace wavescat
