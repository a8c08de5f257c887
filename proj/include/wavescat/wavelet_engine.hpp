#pragma once

#include <cstddef>
#include <vector>

#include "wavescat/filter_design.hpp"
#include "wavescat/signal.hpp"

namespace wavescat {

enum class Boundary { kReflect, kPeriodic };

// Layout of the padded circular working grid.  The signal occupies
// [pad_left, pad_left + signal_len); pad_left is a multiple of frame_step so
// frames land on integer indices at every stage rate.
struct GridLayout {
  std::size_t grid_size = 0;
  std::size_t pad_left = 0;
  std::size_t signal_len = 0;
  std::size_t frame_step = 1;  // samples per output frame (T / 2^oversampling)

  std::size_t n_frames() const {
    return (signal_len + frame_step - 1) / frame_step;
  }
};

GridLayout plan_grid(std::size_t signal_len, double t_scale, int oversampling,
                     Boundary boundary);

// Subsampling step for the modulus of a band with the given Gaussian width,
// at the original rate `base_step`.  Power of two, capped at max_step.
std::size_t modulus_step(double sigma_f, int oversampling,
                         std::size_t base_step, std::size_t max_step);

// Wavelet-modulus rows over the full padded grid, all on one common time
// step.  Rows are ordered by descending center frequency; the first
// n_uniform rows sit on the uniform 1/Q log-frequency grid, followed by the
// low-frequency fillers.
struct Scalogram {
  std::vector<std::vector<double>> rows;
  std::vector<double> lambdas;  // log2 center frequency, original-rate units
  std::vector<double> sigmas;   // filter sigma, original-rate units
  std::size_t n_uniform = 0;
  int q = 1;
  std::size_t step = 1;
  GridLayout layout;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return rows.empty() ? 0 : rows[0].size(); }
  std::size_t first_signal_col() const { return layout.pad_left / step; }
  std::size_t n_signal_cols() const {
    return (layout.signal_len + step - 1) / step;
  }
  // Copy of the rows restricted to the signal extent.
  std::vector<std::vector<double>> signal_region() const;
};

Scalogram scalogram_direct(const Signal& x, const FilterBank& bank,
                           int oversampling,
                           Boundary boundary = Boundary::kReflect,
                           int n_threads = 1);

// Multirate octave cascade (verification backend).  Same output contract as
// scalogram_direct.
Scalogram scalogram_cascade(const Signal& x, const FilterBank& bank,
                            int oversampling,
                            Boundary boundary = Boundary::kReflect);

// Rows of time-averaged coefficients on the frame grid.
struct Frames {
  std::vector<std::vector<double>> rows;
  std::size_t frame_step = 1;
  std::size_t n_frames = 0;
};

// phi_T averaging of every scalogram row, subsampled to the frame grid and
// cropped to the signal extent.
Frames lowpass_subsample(const Scalogram& X, double t_scale, int oversampling,
                         int n_threads = 1);

// One row: envelope at `step` over the padded grid -> frame samples.
std::vector<double> lowpass_subsample_row(const std::vector<double>& env,
                                          std::size_t step,
                                          const GridLayout& layout,
                                          double t_scale);

// |X * Psi_(mu,ell,s)| over the uniform rows, at the mu-dependent time step.
struct JointResponse {
  std::vector<std::vector<double>> rows;  // n_uniform x (grid/step)
  std::size_t step = 1;
};

JointResponse joint_convolve_modulus(const Scalogram& X, const JointWavelet& w,
                                     const FilterBank& second_order,
                                     int oversampling);

// --- spectral primitives (shared with the gradient code and tests) ---
namespace ops {

// Reflection padding of x into a length-N circular buffer.
std::vector<cplx> pad_signal(const std::vector<cplx>& x,
                             const GridLayout& layout, Boundary boundary);
void pad_adjoint(const std::vector<cplx>& grad_padded,
                 const GridLayout& layout, Boundary boundary,
                 std::vector<cplx>& grad_x);

// v = ifft_M(fold_D(spec .* resp)), M = spec.size()/fold: the time-domain
// output of a filter, subsampled by `fold`.
std::vector<cplx> band_forward(const std::vector<cplx>& spec,
                               const std::vector<double>& resp,
                               std::size_t fold);
// Hermitian adjoint of band_forward, accumulated into spec_accum (length N).
void band_adjoint_accum(const std::vector<cplx>& grad_time,
                        const std::vector<double>& resp, std::size_t fold,
                        std::vector<cplx>& spec_accum);

// Circular convolution along the row index of a rows x cols matrix with a
// real spectral response on an m_grid >= rows circular axis (zero padding
// beyond the rows).  Self-adjoint for real resp.
void row_axis_convolve(std::vector<std::vector<cplx>>& matrix,
                       const std::vector<double>& resp, int n_threads = 1);

std::size_t pow2_floor(double x);

}  // namespace ops

}  // namespace wavescat
