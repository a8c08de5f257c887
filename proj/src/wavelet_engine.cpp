#include "wavescat/wavelet_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "wavescat/parallel.hpp"

namespace wavescat {

namespace ops {

std::size_t pow2_floor(double x) {
  std::size_t p = 1;
  while (static_cast<double>(p * 2) <= x) p *= 2;
  return p;
}

std::vector<cplx> pad_signal(const std::vector<cplx>& x,
                             const GridLayout& layout, Boundary boundary) {
  const std::size_t n = layout.grid_size;
  const std::size_t len = layout.signal_len;
  std::vector<cplx> u(n, cplx(0.0, 0.0));
  if (boundary == Boundary::kPeriodic) {
    for (std::size_t i = 0; i < len; ++i) u[i] = x[i];
    return u;
  }
  // Symmetric extension with edge duplication, tiled for pads longer than
  // the signal itself.
  auto mirror = [len](std::size_t i) {
    const std::size_t j = i % (2 * len);
    return j < len ? j : 2 * len - 1 - j;
  };
  for (std::size_t i = 0; i < len; ++i) u[layout.pad_left + i] = x[i];
  for (std::size_t i = 0; i < layout.pad_left; ++i)
    u[layout.pad_left - 1 - i] = x[mirror(i)];
  const std::size_t right_extent = std::min(len, n - layout.pad_left - len);
  for (std::size_t i = 0; i < right_extent; ++i)
    u[layout.pad_left + len + i] = x[len - 1 - mirror(i)];
  return u;
}

void pad_adjoint(const std::vector<cplx>& grad_padded,
                 const GridLayout& layout, Boundary boundary,
                 std::vector<cplx>& grad_x) {
  const std::size_t len = layout.signal_len;
  grad_x.assign(len, cplx(0.0, 0.0));
  if (boundary == Boundary::kPeriodic) {
    for (std::size_t i = 0; i < len; ++i) grad_x[i] += grad_padded[i];
    return;
  }
  auto mirror = [len](std::size_t i) {
    const std::size_t j = i % (2 * len);
    return j < len ? j : 2 * len - 1 - j;
  };
  for (std::size_t i = 0; i < len; ++i)
    grad_x[i] += grad_padded[layout.pad_left + i];
  for (std::size_t i = 0; i < layout.pad_left; ++i)
    grad_x[mirror(i)] += grad_padded[layout.pad_left - 1 - i];
  const std::size_t n = layout.grid_size;
  const std::size_t right_extent = std::min(len, n - layout.pad_left - len);
  for (std::size_t i = 0; i < right_extent; ++i)
    grad_x[len - 1 - mirror(i)] += grad_padded[layout.pad_left + len + i];
}

std::vector<cplx> band_forward(const std::vector<cplx>& spec,
                               const std::vector<double>& resp,
                               std::size_t fold) {
  const std::size_t n = spec.size();
  const std::size_t m = n / fold;
  std::vector<cplx> out(m, cplx(0.0, 0.0));
  for (std::size_t p = 0; p < fold; ++p) {
    const std::size_t base = p * m;
    for (std::size_t k = 0; k < m; ++k)
      out[k] += spec[base + k] * resp[base + k];
  }
  const double scale = 1.0 / static_cast<double>(fold);
  for (auto& v : out) v *= scale;
  ifft_inplace(out);
  return out;
}

void band_adjoint_accum(const std::vector<cplx>& grad_time,
                        const std::vector<double>& resp, std::size_t fold,
                        std::vector<cplx>& spec_accum) {
  const std::size_t m = grad_time.size();
  const std::size_t n = spec_accum.size();
  std::vector<cplx> g = grad_time;
  fft_inplace(g);
  const double scale = 1.0 / (static_cast<double>(m) * fold);
  for (std::size_t p = 0; p < fold; ++p) {
    const std::size_t base = p * m;
    for (std::size_t k = 0; k < m; ++k)
      spec_accum[base + k] += resp[base + k] * g[k] * scale;
  }
  (void)n;
}

void row_axis_convolve(std::vector<std::vector<cplx>>& matrix,
                       const std::vector<double>& resp, int n_threads) {
  const std::size_t rows = matrix.size();
  if (rows == 0) return;
  const std::size_t cols = matrix[0].size();
  const std::size_t m = resp.size();
  parallel_for(cols, n_threads, [&](std::size_t c) {
    std::vector<cplx> buf(m, cplx(0.0, 0.0));
    for (std::size_t r = 0; r < rows; ++r) buf[r] = matrix[r][c];
    fft_inplace(buf);
    for (std::size_t k = 0; k < m; ++k) buf[k] *= resp[k];
    ifft_inplace(buf);
    for (std::size_t r = 0; r < rows; ++r) matrix[r][c] = buf[r];
  });
}

}  // namespace ops

GridLayout plan_grid(std::size_t signal_len, double t_scale, int oversampling,
                     Boundary boundary) {
  if (signal_len < 2) throw ConfigError("grid: signal too short");
  if (t_scale > static_cast<double>(signal_len))
    throw ConfigError("grid: t_scale exceeds the signal length");
  GridLayout layout;
  layout.signal_len = signal_len;
  const std::size_t t_pow2 = ops::pow2_floor(t_scale);
  layout.frame_step = std::max<std::size_t>(1, t_pow2 >> oversampling);
  if (boundary == Boundary::kPeriodic) {
    if (!is_pow2(signal_len))
      throw ConfigError("grid: periodic boundary requires power-of-two length");
    layout.grid_size = signal_len;
    layout.pad_left = 0;
    return layout;
  }
  const std::size_t pad =
      std::min(static_cast<std::size_t>(t_scale), signal_len);
  layout.pad_left =
      ((pad + layout.frame_step - 1) / layout.frame_step) * layout.frame_step;
  layout.grid_size = next_pow2(layout.pad_left + signal_len + pad);
  return layout;
}

std::size_t modulus_step(double sigma_f, int oversampling,
                         std::size_t base_step, std::size_t max_step) {
  const double env_bw = 10.0 * sigma_f;
  const double rate = std::min(1.0, std::pow(2.0, oversampling) * env_bw);
  std::size_t step = base_step * ops::pow2_floor(1.0 / rate);
  step = std::min(step, max_step);
  return std::max(step, base_step);
}

std::vector<std::vector<double>> Scalogram::signal_region() const {
  std::vector<std::vector<double>> out(rows.size());
  const std::size_t c0 = first_signal_col();
  const std::size_t nc = n_signal_cols();
  for (std::size_t r = 0; r < rows.size(); ++r)
    out[r].assign(rows[r].begin() + c0, rows[r].begin() + c0 + nc);
  return out;
}

namespace {

GridLayout engine_layout(const Signal& x, const FilterBank& bank,
                         int oversampling, Boundary boundary) {
  GridLayout layout =
      plan_grid(x.size(), bank.t_scale, oversampling, boundary);
  if (layout.grid_size > bank.grid)
    throw GridError(
        "signal of " + std::to_string(x.size()) +
        " samples does not fit the filter grid of " +
        std::to_string(bank.grid) +
        " after padding; rebuild the bank on a grid of at least " +
        std::to_string(layout.grid_size) +
        " or process the signal in blocks");
  layout.grid_size = bank.grid;
  return layout;
}

std::size_t common_scalogram_step(const FilterBank& bank, int oversampling,
                                  std::size_t frame_step) {
  std::size_t step = frame_step;
  for (const auto& w : bank.wavelets)
    step = std::min(step, modulus_step(w.shape.sigma, oversampling, 1,
                                        frame_step));
  return step;
}

// Smooth-step lowpass for the octave recursion: flat to 0.24, zero past 0.26.
double cascade_h(double freq) {
  const double a = std::abs(freq);
  if (a <= 0.24) return 1.0;
  if (a >= 0.26) return 0.0;
  const double t = (a - 0.24) / 0.02;
  const double c = std::cos(0.5 * M_PI * t);
  return c * c;
}

std::vector<double> cascade_h_response(std::size_t n) {
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i <= n / 2) ? static_cast<double>(i) / n
                                  : static_cast<double>(i) / n - 1.0;
    r[i] = cascade_h(w);
  }
  return r;
}

}  // namespace

Scalogram scalogram_direct(const Signal& x, const FilterBank& bank,
                           int oversampling, Boundary boundary,
                           int n_threads) {
  x.validate();
  Scalogram sc;
  sc.layout = engine_layout(x, bank, oversampling, boundary);
  sc.q = bank.q_factor;
  sc.step = common_scalogram_step(bank, oversampling, sc.layout.frame_step);
  sc.n_uniform = bank.n_octave_wavelets;

  std::vector<cplx> spec = ops::pad_signal(x.samples, sc.layout, boundary);
  fft_inplace(spec);

  const std::size_t n_rows = bank.size();
  sc.rows.resize(n_rows);
  sc.lambdas.resize(n_rows);
  sc.sigmas.resize(n_rows);
  parallel_for(n_rows, n_threads, [&](std::size_t r) {
    const AnalyticFilter& w = bank.wavelets[r];
    std::vector<cplx> band = ops::band_forward(spec, w.response, sc.step);
    std::vector<double> env(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) env[i] = std::abs(band[i]);
    sc.rows[r] = std::move(env);
    sc.lambdas[r] = w.center_log_freq;
    sc.sigmas[r] = w.shape.sigma;
  });
  return sc;
}

Scalogram scalogram_cascade(const Signal& x, const FilterBank& bank,
                            int oversampling, Boundary boundary) {
  x.validate();
  Scalogram sc;
  sc.layout = engine_layout(x, bank, oversampling, boundary);
  sc.q = bank.q_factor;
  sc.step = common_scalogram_step(bank, oversampling, sc.layout.frame_step);
  sc.n_uniform = bank.n_octave_wavelets;

  const std::size_t n = sc.layout.grid_size;
  const std::size_t m_common = n / sc.step;
  std::vector<cplx> input_spec = ops::pad_signal(x.samples, sc.layout, boundary);
  fft_inplace(input_spec);

  sc.rows.resize(bank.size());
  sc.lambdas.resize(bank.size());
  sc.sigmas.resize(bank.size());
  for (std::size_t r = 0; r < bank.size(); ++r) {
    sc.lambdas[r] = bank.wavelets[r].center_log_freq;
    sc.sigmas[r] = bank.wavelets[r].shape.sigma;
  }

  // Suboctave band-pass filters shared by every level, sampled per level
  // grid on demand.
  std::map<std::size_t, std::vector<std::vector<double>>> g_cache;
  std::map<std::size_t, std::vector<double>> h_cache;
  auto level_g = [&](std::size_t len) -> const std::vector<std::vector<double>>& {
    auto it = g_cache.find(len);
    if (it != g_cache.end()) return it->second;
    std::vector<std::vector<double>> gs;
    for (int k = 0; k < bank.q_factor; ++k) {
      const double center =
          kMotherPeakFreq *
          std::pow(2.0, -static_cast<double>(k) / bank.q_factor);
      const double ratio = std::pow(2.0, -1.0 / bank.q_factor);
      const double sigma = center * (1.0 - ratio) / 1.6651092223153954;
      gs.push_back(design_morlet(center, sigma, len).response);
    }
    return g_cache.emplace(len, std::move(gs)).first->second;
  };
  auto level_h = [&](std::size_t len) -> const std::vector<double>& {
    auto it = h_cache.find(len);
    if (it != h_cache.end()) return it->second;
    return h_cache.emplace(len, cascade_h_response(len)).first->second;
  };

  auto store_row = [&](std::size_t row, std::vector<cplx> spec_at_level,
                       std::size_t level_step) {
    // Re-grid the octave output onto the common step.  Analytic bands of
    // level j live in bins [0, n/2^j), so extending the spectrum with zeros
    // (or folding further) is exact.
    std::vector<cplx> common;
    if (level_step == sc.step) {
      common = std::move(spec_at_level);
    } else if (level_step > sc.step) {
      const double gain = static_cast<double>(level_step) / sc.step;
      common.assign(m_common, cplx(0.0, 0.0));
      for (std::size_t k = 0; k < spec_at_level.size(); ++k)
        common[k] = spec_at_level[k] * gain;
    } else {
      const std::size_t extra = sc.step / level_step;
      const std::size_t m = spec_at_level.size() / extra;
      common.assign(m, cplx(0.0, 0.0));
      for (std::size_t p = 0; p < extra; ++p)
        for (std::size_t k = 0; k < m; ++k)
          common[k] += spec_at_level[p * m + k];
      for (auto& v : common) v /= static_cast<double>(extra);
    }
    ifft_inplace(common);
    std::vector<double> env(common.size());
    for (std::size_t i = 0; i < common.size(); ++i)
      env[i] = std::abs(common[i]);
    sc.rows[row] = std::move(env);
  };

  std::vector<cplx> a_spec = input_spec;
  std::size_t level_len = n;
  for (int j = 1; j <= bank.j_max; ++j) {
    const auto& gs = level_g(level_len);
    for (int k = 0; k < bank.q_factor; ++k) {
      // d_{j,k} spectrum at rate 2^j, kept in the frequency domain.
      const std::size_t half = level_len / 2;
      std::vector<cplx> d(half, cplx(0.0, 0.0));
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t q = 0; q < half; ++q)
          d[q] += a_spec[p * half + q] * gs[k][p * half + q];
      for (auto& v : d) v *= 0.5;
      const std::size_t row =
          static_cast<std::size_t>(j - 1) * bank.q_factor + k;
      store_row(row, std::move(d), std::size_t(1) << j);
    }
    // a_j = a_{j-1} * h [2n]
    const auto& h = level_h(level_len);
    const std::size_t half = level_len / 2;
    std::vector<cplx> next(half, cplx(0.0, 0.0));
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t q = 0; q < half; ++q)
        next[q] += a_spec[p * half + q] * h[p * half + q];
    for (auto& v : next) v *= 0.5;
    a_spec = std::move(next);
    level_len = half;
    if (level_len < 8 && j < bank.j_max)
      throw GridError("cascade: grid exhausted before reaching J octaves");
  }

  // Fillers sit below the octave ladder; they are not part of the recursion
  // and are computed directly.
  for (std::size_t r = bank.n_octave_wavelets; r < bank.size(); ++r) {
    std::vector<cplx> band =
        ops::band_forward(input_spec, bank.wavelets[r].response, sc.step);
    std::vector<double> env(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) env[i] = std::abs(band[i]);
    sc.rows[r] = std::move(env);
  }
  return sc;
}

std::vector<double> lowpass_subsample_row(const std::vector<double>& env,
                                          std::size_t step,
                                          const GridLayout& layout,
                                          double t_scale) {
  const std::size_t frame_step = layout.frame_step;
  if (frame_step % step != 0)
    throw GridError("lowpass: frame step is not a multiple of the row step");
  const std::size_t fold = frame_step / step;
  const std::size_t m = env.size();
  AnalyticFilter phi =
      design_gauss_lowpass(t_scale / static_cast<double>(step), m);

  std::vector<cplx> spec(m);
  for (std::size_t i = 0; i < m; ++i) spec[i] = env[i];
  fft_inplace(spec);
  std::vector<cplx> smoothed = ops::band_forward(spec, phi.response, fold);

  const std::size_t idx0 = layout.pad_left / frame_step;
  const std::size_t count = layout.n_frames();
  std::vector<double> frames(count);
  for (std::size_t i = 0; i < count; ++i)
    frames[i] = smoothed[idx0 + i].real();
  return frames;
}

Frames lowpass_subsample(const Scalogram& X, double t_scale, int oversampling,
                         int n_threads) {
  (void)oversampling;  // frame rate fixed by the layout
  if (t_scale > static_cast<double>(X.layout.signal_len))
    throw ConfigError("lowpass: t_scale exceeds the signal extent");
  Frames out;
  out.frame_step = X.layout.frame_step;
  out.n_frames = X.layout.n_frames();
  out.rows.resize(X.n_rows());
  parallel_for(X.n_rows(), n_threads, [&](std::size_t r) {
    out.rows[r] =
        lowpass_subsample_row(X.rows[r], X.step, X.layout, t_scale);
  });
  return out;
}

JointResponse joint_convolve_modulus(const Scalogram& X, const JointWavelet& w,
                                     const FilterBank& second_order,
                                     int oversampling) {
  if (X.n_uniform == 0) throw ConfigError("joint: scalogram has no uniform rows");
  const std::size_t m_time = X.n_cols();
  if (second_order.grid != m_time)
    throw GridError("joint: second-order bank grid does not match scalogram");
  const AnalyticFilter& g = second_order.wavelets[w.mu_index];
  if (g.center_freq > 0.45)
    throw GridError("joint: scalogram rate too low for the requested mu band");
  if (w.freq_axis_response.size() < 2 * X.n_uniform)
    throw GridError("joint: frequency-axis grid smaller than the lambda axis");

  JointResponse out;
  out.step = modulus_step(g.shape.sigma, oversampling, X.step,
                          X.layout.frame_step);
  const std::size_t fold = out.step / X.step;

  std::vector<std::vector<cplx>> bands(X.n_uniform);
  for (std::size_t r = 0; r < X.n_uniform; ++r) {
    std::vector<cplx> spec(m_time);
    for (std::size_t i = 0; i < m_time; ++i) spec[i] = X.rows[r][i];
    fft_inplace(spec);
    bands[r] = ops::band_forward(spec, g.response, fold);
  }
  ops::row_axis_convolve(bands, w.freq_axis_response);

  out.rows.resize(X.n_uniform);
  for (std::size_t r = 0; r < X.n_uniform; ++r) {
    out.rows[r].resize(bands[r].size());
    for (std::size_t i = 0; i < bands[r].size(); ++i)
      out.rows[r][i] = std::abs(bands[r][i]);
  }
  return out;
}

}  // namespace wavescat
