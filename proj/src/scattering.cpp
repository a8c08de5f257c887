#include "wavescat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavescat/parallel.hpp"

namespace wavescat {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kMel: return "mel";
    case TransformKind::kTime: return "time";
    case TransformKind::kJoint: return "joint";
  }
  return "?";
}

TransformKind transform_kind_from_string(const std::string& s) {
  if (s == "mel") return TransformKind::kMel;
  if (s == "time") return TransformKind::kTime;
  if (s == "joint") return TransformKind::kJoint;
  throw ConfigError("unknown transform kind: " + s);
}

double ScatteringConfig::t_effective() const {
  if (!(t_scale > 0.0)) throw ConfigError("config: T must be positive");
  const long p = std::lround(std::log2(t_scale));
  return std::pow(2.0, static_cast<double>(std::max(1L, p)));
}

void ScatteringConfig::validate() const {
  if (q_factor < 1) throw ConfigError("config: Q must be a positive integer");
  const double t = t_effective();
  if (t < 2.0 * q_factor)
    throw ConfigError("config: T must be at least 2Q samples");
  if (oversampling < 0 || oversampling > 4)
    throw ConfigError("config: oversampling must lie in [0, 4]");
  if (kind == TransformKind::kJoint && f_octaves < 1.0)
    throw ConfigError("config: joint transform requires F >= 1 octave");
  if (log_epsilon < 0.0)
    throw ConfigError("config: log epsilon must be nonnegative");
  if (n_threads < 1) throw ConfigError("config: thread count must be >= 1");
}

std::size_t ScatteringOutput::coefficient_count() const {
  std::size_t n = 0;
  for (const auto& r : s1) n += r.size();
  for (const auto& r : s1_fr) n += r.size();
  for (const auto& r : s2) n += r.size();
  return n;
}

double ScatteringOutput::norm_sq() const {
  double sum = 0.0;
  for (const auto* block : {&s1, &s1_fr, &s2})
    for (const auto& row : *block)
      for (double v : row) sum += v * v;
  return sum;
}

bool ScatteringOutput::same_shape(const ScatteringOutput& other) const {
  return n_frames == other.n_frames && s1.size() == other.s1.size() &&
         s1_fr.size() == other.s1_fr.size() && s2.size() == other.s2.size();
}

TransformPlan build_transform_plan(const ScatteringConfig& cfg,
                                   std::size_t signal_len) {
  cfg.validate();
  TransformPlan plan;
  plan.cfg = cfg;
  plan.t_eff = cfg.t_effective();
  plan.layout =
      plan_grid(signal_len, plan.t_eff, cfg.oversampling, cfg.boundary);
  plan.first = build_first_order_bank(cfg.q_factor, plan.t_eff,
                                      plan.layout.grid_size);

  plan.step1 = plan.layout.frame_step;
  for (const auto& w : plan.first.wavelets)
    plan.step1 = std::min(plan.step1,
                          modulus_step(w.shape.sigma, cfg.oversampling, 1,
                                       plan.layout.frame_step));
  plan.n_uniform = plan.first.n_octave_wavelets;

  if (cfg.kind == TransformKind::kMel) return plan;

  const std::size_t m1 = plan.layout.grid_size / plan.step1;
  const double t_grid = plan.t_eff / static_cast<double>(plan.step1);
  if (t_grid < 2.0 || m1 < 16)
    throw GridError("plan: T too small relative to the scalogram rate");
  plan.second = build_second_order_bank(t_grid, m1);
  plan.mu_steps.resize(plan.second.size());
  for (std::size_t i = 0; i < plan.second.size(); ++i)
    plan.mu_steps[i] =
        modulus_step(plan.second.wavelets[i].shape.sigma, cfg.oversampling,
                     plan.step1, plan.layout.frame_step);

  if (cfg.kind == TransformKind::kTime) {
    // Keep (lambda, mu) only where the modulation band sits below the
    // carrier band: 2^mu < 2^lambda in original-rate units.
    for (std::size_t r = 0; r < plan.first.size(); ++r) {
      const double f_lambda = plan.first.wavelets[r].center_freq;
      for (std::size_t mi = 0; mi < plan.second.size(); ++mi) {
        const double f_mu =
            plan.second.wavelets[mi].center_freq / plan.step1;
        if (f_mu < f_lambda) plan.time_paths.emplace_back(r, mi);
      }
    }
    return plan;
  }

  plan.freq = build_frequency_bank(cfg.f_octaves, cfg.q_factor,
                                   plan.n_uniform);
  plan.joint = build_joint_filters(plan.second, plan.freq);
  return plan;
}

namespace {

std::vector<std::vector<cplx>> row_spectra(const Scalogram& X,
                                           std::size_t count, int n_threads) {
  std::vector<std::vector<cplx>> specs(count);
  parallel_for(count, n_threads, [&](std::size_t r) {
    std::vector<cplx> s(X.rows[r].size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = X.rows[r][i];
    fft_inplace(s);
    specs[r] = std::move(s);
  });
  return specs;
}

ScatteringOutput assemble_from_scalogram(const TransformPlan& plan,
                                         const Scalogram& X) {
  const ScatteringConfig& cfg = plan.cfg;
  if (X.step != plan.step1 || X.n_rows() != plan.first.size())
    throw GridError("scattering: scalogram does not match the plan");

  ScatteringOutput out;
  out.config = cfg;
  out.frame_step = plan.layout.frame_step;
  out.n_frames = plan.layout.n_frames();
  out.n_uniform = plan.n_uniform;

  Frames s1 = lowpass_subsample(X, plan.t_eff, cfg.oversampling,
                                cfg.n_threads);
  out.s1 = std::move(s1.rows);
  out.s1_lambdas = X.lambdas;

  if (cfg.kind == TransformKind::kMel) return out;

  for (const auto& w : plan.second.wavelets)
    out.mu_log_freqs.push_back(w.center_log_freq -
                               std::log2(static_cast<double>(plan.step1)));

  if (cfg.kind == TransformKind::kTime) {
    // One spectrum per referenced row, shared across its mu paths.
    std::vector<std::vector<cplx>> specs =
        row_spectra(X, X.n_rows(), cfg.n_threads);
    out.s2.resize(plan.time_paths.size());
    out.s2_paths.resize(plan.time_paths.size());
    parallel_for(plan.time_paths.size(), cfg.n_threads, [&](std::size_t p) {
      const auto [row, mi] = plan.time_paths[p];
      const std::size_t step = plan.mu_steps[mi];
      std::vector<cplx> band = ops::band_forward(
          specs[row], plan.second.wavelets[mi].response, step / plan.step1);
      std::vector<double> env(band.size());
      for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::abs(band[i]);
      out.s2[p] =
          lowpass_subsample_row(env, step, plan.layout, plan.t_eff);
      out.s2_paths[p] = PathKey{static_cast<int>(row), static_cast<int>(mi),
                                0, 0};
    });
    return out;
  }

  // Joint kind: per mu, the band-passed rows are shared by every (ell, s).
  for (int ell = plan.freq.ell_min; ell <= plan.freq.ell_max; ++ell)
    out.quefrencies.push_back(plan.freq.quefrency(ell));

  std::vector<std::vector<cplx>> specs =
      row_spectra(X, plan.n_uniform, cfg.n_threads);
  const std::size_t per_mu = 2 * plan.freq.size() + 1;
  out.s2.resize(plan.joint.size() * plan.n_uniform);
  out.s2_paths.resize(out.s2.size());

  for (std::size_t mi = 0; mi < plan.second.size(); ++mi) {
    const std::size_t step = plan.mu_steps[mi];
    const std::size_t fold = step / plan.step1;
    std::vector<std::vector<cplx>> bands(plan.n_uniform);
    parallel_for(plan.n_uniform, cfg.n_threads, [&](std::size_t r) {
      bands[r] = ops::band_forward(specs[r],
                                   plan.second.wavelets[mi].response, fold);
    });
    parallel_for(per_mu, cfg.n_threads, [&](std::size_t fi) {
      const std::size_t jf = mi * per_mu + fi;
      const JointWavelet& w = plan.joint[jf];
      std::vector<std::vector<cplx>> work = bands;
      ops::row_axis_convolve(work, w.freq_axis_response);
      for (std::size_t r = 0; r < plan.n_uniform; ++r) {
        std::vector<double> env(work[r].size());
        for (std::size_t i = 0; i < env.size(); ++i)
          env[i] = std::abs(work[r][i]);
        const std::size_t col = jf * plan.n_uniform + r;
        out.s2[col] =
            lowpass_subsample_row(env, step, plan.layout, plan.t_eff);
        out.s2_paths[col] =
            PathKey{static_cast<int>(r), static_cast<int>(w.mu_index), w.ell,
                    w.spin};
      }
    });
  }
  return out;
}

}  // namespace

ScatteringOutput scattering_transform(const Signal& x,
                                      const ScatteringConfig& cfg) {
  TransformPlan plan = build_transform_plan(cfg, x.size());
  Scalogram X = scalogram_direct(x, plan.first, cfg.oversampling,
                                 cfg.boundary, cfg.n_threads);
  ScatteringOutput out = assemble_from_scalogram(plan, X);
  if (cfg.transposition_invariant)
    out = transposition_invariant(out, cfg);
  return out;
}

ScatteringOutput mel_spectrogram(const Signal& x,
                                 const ScatteringConfig& cfg) {
  if (cfg.kind != TransformKind::kMel)
    throw ConfigError("mel_spectrogram: config kind must be mel");
  return scattering_transform(x, cfg);
}

ScatteringOutput time_scattering(const Signal& x,
                                 const ScatteringConfig& cfg) {
  if (cfg.kind != TransformKind::kTime)
    throw ConfigError("time_scattering: config kind must be time");
  return scattering_transform(x, cfg);
}

ScatteringOutput joint_scattering(const Signal& x,
                                  const ScatteringConfig& cfg) {
  if (cfg.kind != TransformKind::kJoint)
    throw ConfigError("joint_scattering: config kind must be joint");
  return scattering_transform(x, cfg);
}

ScatteringOutput scattering_from_scalogram(const Scalogram& X,
                                           const ScatteringConfig& cfg) {
  TransformPlan plan = build_transform_plan(cfg, X.layout.signal_len);
  return assemble_from_scalogram(plan, X);
}

ScatteringOutput transposition_invariant(const ScatteringOutput& out,
                                         const ScatteringConfig& cfg,
                                         bool average_s1) {
  if (out.config.kind == TransformKind::kMel)
    throw ConfigError(
        "transposition_invariant: input must be a time or joint transform");
  const std::size_t rows = out.n_uniform;
  if (rows == 0) throw ConfigError("transposition_invariant: no uniform rows");
  const double extent = static_cast<double>(rows) / out.config.q_factor;
  if (cfg.f_octaves > extent)
    throw GridError("transposition_invariant: F exceeds the lambda extent");

  FrequencyBank fb =
      build_frequency_bank(cfg.f_octaves, out.config.q_factor, rows);

  ScatteringOutput tr = out;
  tr.config.transposition_invariant = true;

  // First order: scattering along lambda.  Columns (frames) are processed
  // independently; each fr wavelet contributes |s1 (*)_lambda psi_ell|,
  // optionally averaged by phi_F, and the phi_F row carries the average.
  const std::size_t n_fr = fb.size();
  tr.s1_fr.assign((n_fr + 1) * rows,
                  std::vector<double>(out.n_frames, 0.0));
  tr.s1_fr_paths.resize((n_fr + 1) * rows);
  for (std::size_t fi = 0; fi <= n_fr; ++fi) {
    const bool is_lowpass = (fi == n_fr);
    const int ell = is_lowpass ? kEllLowpass
                               : fb.ell_min + static_cast<int>(fi);
    for (std::size_t r = 0; r < rows; ++r)
      tr.s1_fr_paths[fi * rows + r] =
          FrPathKey{ell, static_cast<int>(r)};

    std::vector<std::vector<cplx>> work(rows,
                                        std::vector<cplx>(out.n_frames));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < out.n_frames; ++t)
        work[r][t] = out.s1[r][t];
    if (is_lowpass) {
      ops::row_axis_convolve(work, fb.lowpass.response, cfg.n_threads);
    } else {
      ops::row_axis_convolve(work, fb.wavelets[fi].response, cfg.n_threads);
      for (auto& row : work)
        for (auto& v : row) v = std::abs(v);
      if (average_s1)
        ops::row_axis_convolve(work, fb.lowpass.response, cfg.n_threads);
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < out.n_frames; ++t)
        tr.s1_fr[fi * rows + r][t] = std::abs(work[r][t]);
  }
  tr.s1.clear();

  // Second order: average along lambda with phi_F.
  if (out.config.kind == TransformKind::kJoint) {
    const std::size_t n_joint = out.s2.size() / rows;
    parallel_for(n_joint, cfg.n_threads, [&](std::size_t jf) {
      std::vector<std::vector<cplx>> work(rows,
                                          std::vector<cplx>(out.n_frames));
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < out.n_frames; ++t)
          work[r][t] = out.s2[jf * rows + r][t];
      ops::row_axis_convolve(work, fb.lowpass.response);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < out.n_frames; ++t)
          tr.s2[jf * rows + r][t] = work[r][t].real();
    });
  } else {
    // Time kind (separable variant): the second order is lambda-scattered as
    // well.  Rows for a given mu form the contiguous high-frequency block of
    // the lambda axis, so each group is a regular grid of its own.  The new
    // paths reuse PathKey with ell carrying the lambda-axis filter
    // (kEllLowpass for the phi_F row).
    std::vector<std::vector<std::size_t>> by_mu;
    for (std::size_t p = 0; p < out.s2_paths.size(); ++p) {
      const std::size_t mi = static_cast<std::size_t>(out.s2_paths[p].mu_index);
      if (by_mu.size() <= mi) by_mu.resize(mi + 1);
      by_mu[mi].push_back(p);
    }
    std::vector<std::vector<double>> new_s2;
    std::vector<PathKey> new_paths;
    for (const auto& group : by_mu) {
      if (group.empty()) continue;
      const double extent =
          static_cast<double>(group.size()) / out.config.q_factor;
      const double f_group = std::min(cfg.f_octaves, extent);
      const bool has_wavelets = f_group >= 1.0 && group.size() >= 2;
      FrequencyBank gb =
          has_wavelets
              ? build_frequency_bank(f_group, out.config.q_factor,
                                     group.size())
              : FrequencyBank{};
      if (!has_wavelets) {
        gb.m_grid = next_pow2(2 * group.size());
        gb.lowpass = design_gauss_lowpass(
            std::max(1.0, extent * out.config.q_factor), gb.m_grid);
      }
      const std::size_t n_fr_g = gb.size();
      for (std::size_t fi = 0; fi <= n_fr_g; ++fi) {
        const bool low = (fi == n_fr_g);
        std::vector<std::vector<cplx>> work(group.size(),
                                            std::vector<cplx>(out.n_frames));
        for (std::size_t i = 0; i < group.size(); ++i)
          for (std::size_t t = 0; t < out.n_frames; ++t)
            work[i][t] = out.s2[group[i]][t];
        if (low) {
          ops::row_axis_convolve(work, gb.lowpass.response, cfg.n_threads);
        } else {
          ops::row_axis_convolve(work, gb.wavelets[fi].response,
                                 cfg.n_threads);
          for (auto& row : work)
            for (auto& v : row) v = std::abs(v);
          ops::row_axis_convolve(work, gb.lowpass.response, cfg.n_threads);
        }
        const int ell =
            low ? kEllLowpass : gb.ell_min + static_cast<int>(fi);
        for (std::size_t i = 0; i < group.size(); ++i) {
          std::vector<double> row(out.n_frames);
          for (std::size_t t = 0; t < out.n_frames; ++t)
            row[t] = std::abs(work[i][t]);
          new_s2.push_back(std::move(row));
          PathKey key = out.s2_paths[group[i]];
          key.ell = ell;
          new_paths.push_back(key);
        }
      }
    }
    tr.s2 = std::move(new_s2);
    tr.s2_paths = std::move(new_paths);
  }
  return tr;
}

ScatteringOutput log_scattering(const ScatteringOutput& out) {
  double eps = out.config.log_epsilon;
  if (eps <= 0.0) {
    std::vector<double> nonzero;
    for (const auto* block : {&out.s1, &out.s1_fr})
      for (const auto& row : *block)
        for (double v : row)
          if (v > 0.0) nonzero.push_back(v);
    if (nonzero.empty()) {
      eps = 1e-30;
    } else {
      auto mid = nonzero.begin() + nonzero.size() / 2;
      std::nth_element(nonzero.begin(), mid, nonzero.end());
      eps = 1e-6 * *mid;
    }
  }
  ScatteringOutput lg = out;
  for (auto* block : {&lg.s1, &lg.s1_fr, &lg.s2})
    for (auto& row : *block)
      for (double& v : row) v = std::log(v + eps);
  lg.config.log_epsilon = eps;
  return lg;
}

double relative_distance(const ScatteringOutput& a,
                         const ScatteringOutput& b) {
  if (!a.same_shape(b))
    throw ConfigError("relative_distance: outputs have different shapes");
  double diff = 0.0, ref = 0.0;
  auto accumulate = [&](const std::vector<std::vector<double>>& ra,
                        const std::vector<std::vector<double>>& rb) {
    for (std::size_t r = 0; r < ra.size(); ++r) {
      if (ra[r].size() != rb[r].size())
        throw ConfigError("relative_distance: row length mismatch");
      for (std::size_t i = 0; i < ra[r].size(); ++i) {
        const double d = rb[r][i] - ra[r][i];
        diff += d * d;
        ref += ra[r][i] * ra[r][i];
      }
    }
  };
  accumulate(a.s1, b.s1);
  accumulate(a.s1_fr, b.s1_fr);
  accumulate(a.s2, b.s2);
  if (ref == 0.0)
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(diff / ref);
}

}  // namespace wavescat
