#include "wavescat/chirp_lab.hpp"

#include <algorithm>
#include <cmath>

namespace wavescat {

double ChirpSpec::start_freq() const {
  if (f_start > 0.0) return f_start;
  const double a = alpha_per_sample();
  if (alpha == 0.0) return 1.0 / time_unit;
  // Sweep ending (alpha > 0) or starting (alpha < 0) just below Nyquist.
  if (a > 0.0)
    return 0.45 * std::pow(2.0, -a * static_cast<double>(duration - 1));
  return 0.45;
}

double ChirpSpec::instantaneous_freq(double n) const {
  if (alpha == 0.0) return start_freq();
  return start_freq() * std::pow(2.0, alpha_per_sample() * n);
}

Signal exponential_chirp(const ChirpSpec& spec) {
  if (spec.duration < 2) throw ConfigError("chirp: duration too short");
  if (spec.time_unit <= 0.0) throw ConfigError("chirp: bad time unit");
  const double a = spec.alpha_per_sample();
  const double f0 = spec.start_freq();
  if (!(f0 > 0.0 && f0 < 0.5))
    throw ConfigError("chirp: start frequency outside (0, 1/2)");

  const double f_end = spec.instantaneous_freq(
      static_cast<double>(spec.duration - 1));
  if (std::max(f0, f_end) >= 0.5) {
    const double n_max = std::log2(0.5 / f0) / a;
    throw ConfigError(
        "chirp: instantaneous frequency crosses Nyquist; maximal admissible "
        "duration is " +
        std::to_string(static_cast<long long>(std::floor(n_max))) +
        " samples");
  }

  std::vector<cplx> samples(spec.duration);
  if (spec.alpha == 0.0) {
    for (std::size_t n = 0; n < spec.duration; ++n) {
      const double phase = 2.0 * M_PI * f0 * static_cast<double>(n);
      samples[n] = spec.real_part ? cplx(std::cos(phase), 0.0)
                                  : cplx(std::cos(phase), std::sin(phase));
    }
  } else {
    const double scale = f0 / (a * std::log(2.0));
    for (std::size_t n = 0; n < spec.duration; ++n) {
      const double phase =
          2.0 * M_PI * scale * std::pow(2.0, a * static_cast<double>(n));
      samples[n] = spec.real_part ? cplx(std::cos(phase), 0.0)
                                  : cplx(std::cos(phase), std::sin(phase));
    }
  }
  Signal x = Signal::from_complex(std::move(samples));
  x.real_valued = spec.real_part;
  return x;
}

namespace {

std::size_t nearest_row(const FilterBank& bank, double lambda) {
  std::size_t best = 0;
  double best_d = 1e300;
  for (std::size_t r = 0; r < bank.size(); ++r) {
    const double d = std::abs(bank.wavelets[r].center_log_freq - lambda);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

}  // namespace

Lemma1Outcome lemma1_check(const ChirpSpec& spec, const FilterBank& bank,
                           double lambda, double fitted_c) {
  Signal x = exponential_chirp(spec);
  // Full-rate single-channel envelope, periodic topology: the chirp model is
  // defined on the open line, so evaluation is restricted away from the
  // wrap-around by the window below.
  Scalogram sc = scalogram_direct(x, bank, 4, Boundary::kReflect);
  const std::size_t row = nearest_row(bank, lambda);
  const AnalyticFilter& w = bank.wavelets[row];

  const double a = spec.alpha_per_sample();
  Lemma1Outcome out;
  out.lambda = w.center_log_freq;
  out.bound_shape = std::abs(a) / w.center_freq;
  out.bound = fitted_c * out.bound_shape;

  const std::size_t c0 = sc.first_signal_col();
  const std::size_t nc = sc.n_signal_cols();
  double max_err = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    const double n = static_cast<double>(i * sc.step);
    const double f_inst = spec.instantaneous_freq(n);
    // Mid-ridge window: within two octaves of the channel and clear of the
    // signal edges by one channel duration.
    if (f_inst < w.center_freq / 4.0 || f_inst > w.center_freq * 4.0)
      continue;
    const double margin = 2.0 / (2.0 * M_PI * w.shape.sigma);
    if (n < margin ||
        n > static_cast<double>(spec.duration) - margin)
      continue;
    const double measured = sc.rows[row][c0 + i];
    const double predicted = w.shape.eval(f_inst);
    max_err = std::max(max_err, std::abs(measured - predicted));
  }
  out.max_abs_error = max_err;
  return out;
}

double fit_lemma1_constant(const FilterBank& bank,
                           const std::vector<ChirpSpec>& calibration,
                           const std::vector<double>& lambdas) {
  double c = 0.0;
  for (const ChirpSpec& spec : calibration)
    for (double lam : lambdas) {
      Lemma1Outcome o = lemma1_check(spec, bank, lam);
      if (o.bound_shape > 0.0)
        c = std::max(c, o.max_abs_error / o.bound_shape);
    }
  return c;
}

double chirp_c0(const FilterBank& first_order) {
  // c0 = int |psi^(2^u)| du = int |psi^(w)| / (w ln 2) dw, scale-invariant,
  // evaluated on the top wavelet's closed form.
  const GaborShape& shape = first_order.wavelets.front().shape;
  const double lo = shape.center * 1e-3;
  const double hi = 0.5;
  const std::size_t steps = 200000;
  double acc = 0.0;
  const double dw = (hi - lo) / static_cast<double>(steps);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double w = lo + dw * static_cast<double>(i);
    const double f = std::abs(shape.eval(w)) / (w * std::log(2.0));
    acc += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  return acc * dw;
}

std::vector<Theorem1Row> theorem1_check(const ChirpSpec& spec,
                                        const ScatteringConfig& cfg,
                                        const ScatteringOutput& out,
                                        const std::vector<Theorem1Point>& pts,
                                        double fitted_c) {
  TransformPlan plan = build_transform_plan(cfg, spec.duration);
  const double a = spec.alpha_per_sample();
  if (a == 0.0) throw ConfigError("theorem1_check: alpha must be nonzero");
  const double c0 = chirp_c0(plan.first);
  const double step1 = static_cast<double>(plan.step1);

  // Envelope factor per mu: (|g_mu| * phi_T) on the scalogram grid.
  const std::size_t m1 = plan.layout.grid_size / plan.step1;
  AnalyticFilter phi = design_gauss_lowpass(plan.t_eff / step1, m1);
  std::vector<std::vector<double>> env_conv(plan.second.size());
  for (std::size_t mi = 0; mi < plan.second.size(); ++mi) {
    std::vector<cplx> taps = plan.second.wavelets[mi].time_taps();
    std::vector<cplx> env(m1);
    for (std::size_t i = 0; i < m1; ++i) env[i] = std::abs(taps[i]);
    fft_inplace(env);
    for (std::size_t k = 0; k < m1; ++k) env[k] *= phi.response[k];
    ifft_inplace(env);
    env_conv[mi].resize(m1);
    for (std::size_t i = 0; i < m1; ++i) env_conv[mi][i] = env[i].real();
  }

  const std::size_t per_mu = 2 * plan.freq.size() + 1;
  std::vector<Theorem1Row> rows;
  rows.reserve(pts.size());
  for (const Theorem1Point& p : pts) {
    Theorem1Row row;
    row.point = p;

    // Actual coefficient from the transform output.
    std::size_t fi = 0;
    bool found = false;
    for (; fi < per_mu; ++fi) {
      const JointWavelet& w = plan.joint[p.mu_index * per_mu + fi];
      if (w.ell == p.ell && w.spin == p.spin) {
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("theorem1_check: no such (ell, spin)");
    const std::size_t col =
        (static_cast<std::size_t>(p.mu_index) * per_mu + fi) * out.n_uniform +
        p.lambda_row;
    row.actual = out.s2[col][p.frame];

    // Predicted main term.
    const double f_lambda = plan.first.wavelets[p.lambda_row].center_freq;
    const double f_mu =
        plan.second.wavelets[p.mu_index].center_freq / step1;
    const double t0 =
        (std::log2(f_lambda) - std::log2(spec.start_freq())) / a;
    // Frames are anchored at the first signal sample.
    const double t =
        static_cast<double>(p.frame) *
        static_cast<double>(plan.layout.frame_step);
    // env_conv is indexed on the scalogram grid with tap 0 at zero lag.
    const long idx = std::lround((t - t0) / step1);
    const long wrapped =
        ((idx % static_cast<long>(m1)) + static_cast<long>(m1)) %
        static_cast<long>(m1);
    const double env_val = env_conv[p.mu_index][wrapped];

    // The ridge excites the (ell, s) filter at lambda-axis frequency
    // -f_mu/a cycles/octave; in row-step units this is the prototype
    // evaluated at -s f_mu / (a Q).
    const std::size_t fr_index =
        static_cast<std::size_t>(p.ell - plan.freq.ell_min);
    const GaborShape& fr_shape = plan.freq.wavelets[fr_index].shape;
    const double fr_val = std::abs(fr_shape.eval(
        -static_cast<double>(p.spin) * f_mu / (a * plan.freq.q_grid)));

    row.predicted = (c0 / (std::abs(a) * step1)) * env_val * fr_val;
    row.residual = std::abs(row.actual - row.predicted);

    const double a_sup = 5.0 / (2.0 * M_PI * fr_shape.sigma *
                                plan.freq.q_grid);  // octaves, 5 sigma
    row.bound_shape =
        std::abs(a) / f_lambda *
            std::pow(2.0, std::pow(2.0, -p.ell) * a_sup) +
        f_mu * f_mu / (a * a) +
        f_mu * f_mu * std::pow(2.0, -p.ell) / (a * a);
    row.bound = fitted_c * row.bound_shape;
    rows.push_back(row);
  }
  return rows;
}

ChirpRateEstimate estimate_chirp_rate(const ScatteringOutput& out,
                                      std::size_t frame,
                                      std::size_t lambda_row) {
  if (out.config.kind != TransformKind::kJoint)
    throw ConfigError("estimate_chirp_rate: joint transform required");
  double best_band = 0.0, best_low = 0.0;
  ChirpRateEstimate est;
  for (std::size_t p = 0; p < out.s2.size(); ++p) {
    const PathKey& k = out.s2_paths[p];
    if (static_cast<std::size_t>(k.lambda_index) != lambda_row) continue;
    const double v = out.s2[p][frame];
    if (k.ell == kEllLowpass) {
      best_low = std::max(best_low, v);
      continue;
    }
    if (v > best_band) {
      best_band = v;
      est.mu_index = k.mu_index;
      est.ell = k.ell;
      est.spin = k.spin;
    }
  }
  if (best_band <= 0.0)
    throw NumericError("estimate_chirp_rate", "all-zero coefficient slice");
  if (best_low >= best_band)
    throw NumericError("estimate_chirp_rate",
                       "no frequency modulation: the lowpass row dominates");
  const double f_mu = std::pow(2.0, out.mu_log_freqs[est.mu_index]);
  const double quef =
      kMotherPeakFreq * std::pow(2.0, est.ell);  // cycles/octave
  est.alpha_hat = -static_cast<double>(est.spin) * f_mu / quef;
  return est;
}

Scalogram frequency_dependent_shift(
    const Scalogram& X, const std::function<double(double)>& tau) {
  Scalogram out = X;
  const std::size_t m = X.n_cols();
  for (std::size_t r = 0; r < X.n_rows(); ++r) {
    const double shift_cols = tau(X.lambdas[r]) / static_cast<double>(X.step);
    if (std::abs(shift_cols) > static_cast<double>(m))
      throw ConfigError("frequency_dependent_shift: shift exceeds the grid");
    if (shift_cols == 0.0) continue;
    std::vector<cplx> spec(m);
    for (std::size_t i = 0; i < m; ++i) spec[i] = X.rows[r][i];
    fft_inplace(spec);
    for (std::size_t k = 0; k < m; ++k) {
      const double f = (k <= m / 2) ? static_cast<double>(k) / m
                                    : static_cast<double>(k) / m - 1.0;
      spec[k] *= std::exp(cplx(0.0, -2.0 * M_PI * f * shift_cols));
    }
    ifft_inplace(spec);
    for (std::size_t i = 0; i < m; ++i) out.rows[r][i] = spec[i].real();
  }
  return out;
}

double scalogram_ridge_slope(const Scalogram& X) {
  const std::size_t c0 = X.first_signal_col();
  const std::size_t nc = X.n_signal_cols();
  // Least squares of argmax lambda against time over the middle 80%.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (std::size_t i = nc / 10; i < nc - nc / 10; ++i) {
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t r = 0; r < X.n_rows(); ++r) {
      if (X.rows[r][c0 + i] > best_v) {
        best_v = X.rows[r][c0 + i];
        best = r;
      }
    }
    const double t = static_cast<double>(i * X.step);
    const double lam = X.lambdas[best];
    sx += t;
    sy += lam;
    sxx += t * t;
    sxy += t * lam;
    ++count;
  }
  const double n = static_cast<double>(count);
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw NumericError("ridge_slope", "degenerate regression");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace wavescat
