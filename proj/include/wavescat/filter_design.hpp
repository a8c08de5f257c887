#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "wavescat/fft.hpp"

namespace wavescat {

// All filters live on an N-point frequency grid (N a power of two).  Bin i
// holds the response at frequency i/N cycles per sample for i < N/2 and
// i/N - 1 for i >= N/2.  Band-pass filters are analytic: strictly negative
// frequency bins are zero.
//
// Mother wavelets peak at kMotherPeakFreq when their dilation index is zero;
// dilating by 2^-lambda moves the peak to kMotherPeakFreq * 2^lambda.
inline constexpr double kMotherPeakFreq = 0.4;

// Gaussian lowpass of "width" W has its -3 dB points W apart, i.e.
// sigma = W / (2 sqrt(ln 2)) in the filter's own domain.
double lowpass_sigma_for_width(double width);

enum class FilterKind { kBandpass, kLowpass };

// Closed-form frequency response of the zero-mean corrected Gabor:
//   g^(w) = amplitude * (exp(-(w-center)^2/(2 sigma^2))
//                        - correction * exp(-w^2/(2 sigma^2)))
// For lowpass filters center = 0 and correction = 0.
struct GaborShape {
  double center = 0.0;
  double sigma = 0.0;
  double correction = 0.0;
  double amplitude = 1.0;

  double eval(double freq) const;
};

struct AnalyticFilter {
  std::vector<double> response;  // real frequency-domain taps, length N
  GaborShape shape;              // continuous prototype for oracles
  double center_freq = 0.0;      // cycles/sample at the filter's grid rate
  double center_log_freq = 0.0;  // log2(center_freq)
  double bandwidth_octaves = 0.0;
  FilterKind kind = FilterKind::kBandpass;

  std::size_t grid_size() const { return response.size(); }
  // Fraction of |response|^2 carried by strictly negative frequency bins.
  double negative_energy_fraction() const;
  // Time-domain taps via inverse DFT, centered convention (tap 0 at t=0).
  std::vector<cplx> time_taps() const;
};

AnalyticFilter design_morlet(double center_freq, double sigma_freq,
                             std::size_t grid_size);
AnalyticFilter design_gauss_lowpass(double width_samples,
                                    std::size_t grid_size);

// Constant-Q wavelet bank plus lowpass and low-frequency fillers.
struct FilterBank {
  int q_factor = 1;
  double t_scale = 0.0;    // T in samples at this grid's rate
  int j_max = 0;           // J = floor(log2(T/Q))
  double delta = 0.15;     // declared Littlewood-Paley flatness tolerance
  std::size_t grid = 0;

  // Octave wavelets ordered by strictly descending center frequency
  // (lambda = log2(peak) on a uniform 1/Q grid), then fillers below them.
  std::vector<AnalyticFilter> wavelets;
  std::size_t n_octave_wavelets = 0;  // J*Q
  std::size_t n_fillers = 0;
  AnalyticFilter lowpass;  // phi_T

  // Region over which the Littlewood-Paley sum is promised to stay within
  // [1-delta, 1+delta].
  double passband_lo = 0.0;
  double passband_hi = 0.0;

  std::size_t size() const { return wavelets.size(); }
  // |phi^|^2 + sum |psi^|^2 at one UNSIGNED frequency (both analytic halves).
  double littlewood_paley_at(double freq) const;
};

FilterBank build_first_order_bank(int q_factor, double t_scale,
                                  std::size_t grid_size,
                                  double delta = 0.15);
FilterBank build_second_order_bank(double t_scale, std::size_t grid_size,
                                   double delta = 0.15);

// Wavelets along the log-frequency axis of a scalogram.  The row grid has
// one sample per 1/Q octave; quefrencies are reported in cycles/octave.
struct FrequencyBank {
  int q_grid = 1;           // Q of the first-order bank (rows per octave)
  double f_octaves = 0.0;   // F
  std::size_t m_grid = 0;   // padded row-axis FFT size
  int ell_min = 0;
  int ell_max = 0;
  std::vector<AnalyticFilter> wavelets;  // ell = ell_min .. ell_max, ascending
  AnalyticFilter lowpass;                // phi_F on the row axis
  bool lowpass_is_identity = false;      // F <= one row step

  std::size_t size() const { return wavelets.size(); }
  double quefrency(int ell) const;  // cycles/octave of wavelet ell
};

FrequencyBank build_frequency_bank(double f_octaves, int q_grid,
                                   std::size_t n_lambda_rows);

// Separable 2-D filter: a Q=1 temporal wavelet indexed into a second-order
// bank times a row-axis filter from a FrequencyBank (or its lowpass).
inline constexpr int kEllLowpass = std::numeric_limits<int>::min();

struct JointWavelet {
  std::size_t mu_index = 0;   // index into the second-order bank
  double mu_log_freq = 0.0;   // log2 center frequency, at the bank's grid rate
  int ell = 0;                // kEllLowpass for the phi_F row
  int spin = +1;              // only +1 when ell == kEllLowpass
  double quefrency = 0.0;     // cycles/octave (0 for the lowpass row)
  // Row-axis frequency response on the m_grid; spin -1 mirrors the spectrum.
  std::vector<double> freq_axis_response;
};

// Cartesian product mu x ell x {+1,-1} with a single spin +1 lowpass row per
// mu.  Vector order is the flat renumbering G_1..G_L.
std::vector<JointWavelet> build_joint_filters(const FilterBank& second_order,
                                              const FrequencyBank& freq_bank);

// JSON metadata plus interleaved little-endian float32 complex time taps,
// for inspection and cross-implementation comparison.
void write_filter_bank_dump(const FilterBank& bank, const std::string& path);

}  // namespace wavescat
