#include "wavescat/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"
#include "wavescat/parallel.hpp"

namespace wavescat {

namespace {

constexpr double kModulusGuard = 1e-12;
constexpr double kBoldGrow = 1.1;
constexpr double kBoldShrink = 0.5;
constexpr double kLearningRateScale = 0.1;

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// d|z|/dz backprop: grad_z = grad_env * z / |z|, zeroed near the origin.
void modulus_backprop(const std::vector<cplx>& z,
                      const std::vector<double>& grad_env,
                      std::vector<cplx>& grad_z) {
  double peak = 0.0;
  for (const cplx& v : z) peak = std::max(peak, std::abs(v));
  const double guard = kModulusGuard * peak;
  grad_z.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]);
    grad_z[i] = (a > guard) ? grad_env[i] * z[i] / a : cplx(0.0, 0.0);
  }
}

// Adjoint of lowpass_subsample_row: frame gradients back to a spectrum-level
// accumulator for the row (length m = env length).
void lowpass_row_adjoint(const std::vector<double>& grad_frames,
                         std::size_t step, const GridLayout& layout,
                         double t_scale, std::size_t m,
                         std::vector<cplx>& spec_accum) {
  const std::size_t frame_step = layout.frame_step;
  const std::size_t fold = frame_step / step;
  const std::size_t mf = m / fold;
  AnalyticFilter phi =
      design_gauss_lowpass(t_scale / static_cast<double>(step), m);
  std::vector<cplx> g(mf, cplx(0.0, 0.0));
  const std::size_t idx0 = layout.pad_left / frame_step;
  for (std::size_t i = 0; i < grad_frames.size(); ++i)
    g[idx0 + i] = grad_frames[i];
  ops::band_adjoint_accum(g, phi.response, fold, spec_accum);
}

// Residual 2(S_y - S_x) and the energy term for one coefficient row.
double row_residual(const std::vector<double>& got,
                    const std::vector<double>& want,
                    std::vector<double>& residual) {
  residual.resize(got.size());
  double e = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double d = got[i] - want[i];
    e += d * d;
    residual[i] = 2.0 * d;
  }
  return e;
}

void check_finite(const std::vector<double>& v, const char* stage) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(stage, "non-finite value");
}

}  // namespace

Signal init_from_s1(const ScatteringOutput& target, std::size_t length,
                    std::uint64_t seed) {
  TransformPlan plan = build_transform_plan(target.config, length);
  const FilterBank& bank = plan.first;
  if (target.s1.size() != bank.size())
    throw ConfigError("init_from_s1: target does not match the config's bank");

  // Time-averaged per-channel targets.
  std::vector<double> v(bank.size(), 0.0);
  for (std::size_t r = 0; r < bank.size(); ++r) {
    for (double x : target.s1[r]) v[r] += x;
    if (!target.s1[r].empty()) v[r] /= static_cast<double>(target.s1[r].size());
  }

  const std::size_t n = next_pow2(length);
  // Partition positive frequencies into per-channel cells at the crossover
  // points, then solve for the flat gain that reproduces E|noise * psi| = v.
  std::vector<double> gain(n, 0.0);
  std::vector<std::size_t> order(bank.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bank.wavelets[a].center_freq < bank.wavelets[b].center_freq;
  });
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t r = order[oi];
    const AnalyticFilter& w = bank.wavelets[r];
    const double lo =
        oi == 0 ? std::max(0.0, w.center_freq -
                                    0.5 * w.shape.sigma * 1.6651092223153954)
                : 0.5 * (bank.wavelets[order[oi - 1]].center_freq +
                         w.center_freq);
    const double hi =
        oi + 1 == order.size()
            ? w.center_freq + 0.5 * w.shape.sigma * 1.6651092223153954
            : 0.5 * (bank.wavelets[order[oi + 1]].center_freq +
                     w.center_freq);
    double cell_energy = 0.0;
    const std::size_t k_lo = static_cast<std::size_t>(std::ceil(lo * n));
    const std::size_t k_hi = std::min(
        n / 2, static_cast<std::size_t>(std::floor(hi * n)));
    for (std::size_t k = k_lo; k <= k_hi && k <= n / 2; ++k) {
      const double resp = w.shape.eval(static_cast<double>(k) / n);
      cell_energy += resp * resp;
    }
    if (cell_energy <= 0.0 || v[r] <= 0.0) continue;
    const double g =
        v[r] * (2.0 / std::sqrt(M_PI)) /
        std::sqrt(cell_energy / static_cast<double>(n));
    for (std::size_t k = k_lo; k <= k_hi && k <= n / 2; ++k) {
      gain[k] = g;
      if (k > 0 && k < n) gain[n - k] = g;  // real output: symmetric gain
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> noise(n);
  for (std::size_t i = 0; i < n; ++i) noise[i] = normal(rng);
  fft_inplace(noise);
  for (std::size_t k = 0; k < n; ++k) noise[k] *= gain[k];
  ifft_inplace(noise);

  std::vector<double> out(length);
  for (std::size_t i = 0; i < length; ++i) out[i] = noise[i].real();
  return Signal::from_real(std::move(out));
}

GradientResult scattering_gradient(const Signal& y,
                                   const ScatteringOutput& target,
                                   const ScatteringConfig& cfg) {
  y.validate();
  if (cfg.transposition_invariant)
    throw ConfigError("gradient: transposition-invariant synthesis unsupported");
  TransformPlan plan = build_transform_plan(cfg, y.size());
  const GridLayout& layout = plan.layout;
  const int threads = cfg.n_threads;

  // --- forward pass, keeping the complex first-order bands ---
  std::vector<cplx> padded = ops::pad_signal(y.samples, layout, cfg.boundary);
  fft_inplace(padded);
  const std::vector<cplx>& u_spec = padded;

  const std::size_t n_rows = plan.first.size();
  const std::size_t m1 = layout.grid_size / plan.step1;
  std::vector<std::vector<cplx>> v_rows(n_rows);      // complex bands
  std::vector<std::vector<double>> env_rows(n_rows);  // scalogram
  std::vector<std::vector<cplx>> env_specs(n_rows);
  parallel_for(n_rows, threads, [&](std::size_t r) {
    v_rows[r] = ops::band_forward(u_spec, plan.first.wavelets[r].response,
                                  plan.step1);
    env_rows[r].resize(m1);
    for (std::size_t i = 0; i < m1; ++i)
      env_rows[r][i] = std::abs(v_rows[r][i]);
    std::vector<cplx> spec(m1);
    for (std::size_t i = 0; i < m1; ++i) spec[i] = env_rows[r][i];
    fft_inplace(spec);
    env_specs[r] = std::move(spec);
  });

  double energy = 0.0;
  // Adjoint accumulators at the env-spectrum level, one per row; every
  // second-order branch of a row adds its contribution here in a fixed
  // order, keeping results independent of the thread count.
  std::vector<std::vector<cplx>> env_spec_adj(
      n_rows, std::vector<cplx>(m1, cplx(0.0, 0.0)));

  // s1 branch.
  std::vector<double> residual;
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::vector<double> frames =
        lowpass_subsample_row(env_rows[r], plan.step1, layout, plan.t_eff);
    check_finite(frames, "s1");
    energy += row_residual(frames, target.s1[r], residual);
    lowpass_row_adjoint(residual, plan.step1, layout, plan.t_eff, m1,
                        env_spec_adj[r]);
  }

  if (cfg.kind == TransformKind::kTime) {
    for (std::size_t p = 0; p < plan.time_paths.size(); ++p) {
      const auto [row, mi] = plan.time_paths[p];
      const std::size_t step = plan.mu_steps[mi];
      const std::size_t fold = step / plan.step1;
      std::vector<cplx> band = ops::band_forward(
          env_specs[row], plan.second.wavelets[mi].response, fold);
      std::vector<double> env2(band.size());
      for (std::size_t i = 0; i < env2.size(); ++i)
        env2[i] = std::abs(band[i]);
      std::vector<double> frames =
          lowpass_subsample_row(env2, step, layout, plan.t_eff);
      check_finite(frames, "s2-time");
      energy += row_residual(frames, target.s2[p], residual);

      std::vector<cplx> spec2_adj(env2.size(), cplx(0.0, 0.0));
      lowpass_row_adjoint(residual, step, layout, plan.t_eff, env2.size(),
                          spec2_adj);
      ifft_inplace(spec2_adj);
      std::vector<double> env2_adj(env2.size());
      for (std::size_t i = 0; i < env2.size(); ++i)
        env2_adj[i] = spec2_adj[i].real() * static_cast<double>(env2.size());
      std::vector<cplx> band_adj;
      modulus_backprop(band, env2_adj, band_adj);
      ops::band_adjoint_accum(band_adj, plan.second.wavelets[mi].response,
                              fold, env_spec_adj[row]);
    }
  } else if (cfg.kind == TransformKind::kJoint) {
    const std::size_t per_mu = 2 * plan.freq.size() + 1;
    for (std::size_t mi = 0; mi < plan.second.size(); ++mi) {
      const std::size_t step = plan.mu_steps[mi];
      const std::size_t fold = step / plan.step1;
      const std::size_t m_mu = m1 / fold;
      std::vector<std::vector<cplx>> bands(plan.n_uniform);
      parallel_for(plan.n_uniform, threads, [&](std::size_t r) {
        bands[r] = ops::band_forward(env_specs[r],
                                     plan.second.wavelets[mi].response, fold);
      });
      std::vector<std::vector<cplx>> bands_adj(
          plan.n_uniform, std::vector<cplx>(m_mu, cplx(0.0, 0.0)));
      for (std::size_t fi = 0; fi < per_mu; ++fi) {
        const std::size_t jf = mi * per_mu + fi;
        const JointWavelet& w = plan.joint[jf];
        std::vector<std::vector<cplx>> work = bands;
        ops::row_axis_convolve(work, w.freq_axis_response, threads);

        std::vector<std::vector<cplx>> work_adj(
            plan.n_uniform, std::vector<cplx>(m_mu, cplx(0.0, 0.0)));
        std::vector<double> row_energy(plan.n_uniform, 0.0);
        parallel_for(plan.n_uniform, threads, [&](std::size_t r) {
          std::vector<double> env2(m_mu);
          for (std::size_t i = 0; i < m_mu; ++i)
            env2[i] = std::abs(work[r][i]);
          std::vector<double> frames =
              lowpass_subsample_row(env2, step, layout, plan.t_eff);
          const std::size_t col = jf * plan.n_uniform + r;
          std::vector<double> res;
          row_energy[r] = row_residual(frames, target.s2[col], res);

          std::vector<cplx> spec2_adj(m_mu, cplx(0.0, 0.0));
          lowpass_row_adjoint(res, step, layout, plan.t_eff, m_mu, spec2_adj);
          ifft_inplace(spec2_adj);
          std::vector<double> env2_adj(m_mu);
          for (std::size_t i = 0; i < m_mu; ++i)
            env2_adj[i] =
                spec2_adj[i].real() * static_cast<double>(m_mu);
          modulus_backprop(work[r], env2_adj, work_adj[r]);
        });
        for (double e : row_energy) energy += e;
        // The row-axis convolution is self-adjoint for real responses.
        ops::row_axis_convolve(work_adj, w.freq_axis_response, threads);
        for (std::size_t r = 0; r < plan.n_uniform; ++r)
          for (std::size_t i = 0; i < m_mu; ++i)
            bands_adj[r][i] += work_adj[r][i];
      }
      parallel_for(plan.n_uniform, threads, [&](std::size_t r) {
        ops::band_adjoint_accum(bands_adj[r],
                                plan.second.wavelets[mi].response, fold,
                                env_spec_adj[r]);
      });
    }
  }

  // env spectra -> env -> first-order modulus -> input spectrum.
  std::vector<std::vector<cplx>> u_adj_parts(n_rows);
  parallel_for(n_rows, threads, [&](std::size_t r) {
    std::vector<cplx> g = env_spec_adj[r];
    ifft_inplace(g);
    std::vector<double> env_adj(m1);
    for (std::size_t i = 0; i < m1; ++i)
      env_adj[i] = g[i].real() * static_cast<double>(m1);
    std::vector<cplx> v_adj;
    modulus_backprop(v_rows[r], env_adj, v_adj);
    std::vector<cplx> part(layout.grid_size, cplx(0.0, 0.0));
    ops::band_adjoint_accum(v_adj, plan.first.wavelets[r].response,
                            plan.step1, part);
    u_adj_parts[r] = std::move(part);
  });
  std::vector<cplx> u_adj(layout.grid_size, cplx(0.0, 0.0));
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t i = 0; i < layout.grid_size; ++i)
      u_adj[i] += u_adj_parts[r][i];

  ifft_inplace(u_adj);
  for (auto& vv : u_adj) vv *= static_cast<double>(layout.grid_size);
  std::vector<cplx> grad_c;
  ops::pad_adjoint(u_adj, layout, cfg.boundary, grad_c);

  GradientResult out;
  out.energy = energy;
  out.grad.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.grad[i] = grad_c[i].real();
  if (!std::isfinite(out.energy))
    throw NumericError("energy", "non-finite objective");
  check_finite(out.grad, "gradient");
  return out;
}

double scattering_energy(const Signal& y, const ScatteringOutput& target) {
  ScatteringOutput got = scattering_transform(y, target.config);
  double e = 0.0;
  auto accumulate = [&](const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b) {
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t i = 0; i < a[r].size(); ++i) {
        const double d = a[r][i] - b[r][i];
        e += d * d;
      }
  };
  accumulate(got.s1, target.s1);
  accumulate(got.s2, target.s2);
  return e;
}

Signal SynthesisState::current_signal() const {
  std::vector<double> v(current.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(current[i]);
  return Signal::from_real(std::move(v));
}

SynthesisState synthesize_init(const Signal& target_x,
                               const ScatteringConfig& cfg,
                               std::uint64_t seed) {
  SynthesisState st;
  st.config = cfg;
  st.config.transposition_invariant = false;
  st.rng_seed = seed;
  st.target = scattering_transform(target_x, st.config);
  Signal y0 = init_from_s1(st.target, target_x.size(), seed);
  st.current.resize(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i)
    st.current[i] = static_cast<float>(y0.samples[i].real());
  st.velocity.assign(y0.size(), 0.0f);
  st.learning_rate = 0.0;  // fixed on the first gradient evaluation
  return st;
}

SynthesisState resume(SynthesisState st, std::size_t more_iters) {
  if (st.target.s1.empty() && st.target.s2.empty())
    throw ConfigError("resume: state has no target transform attached");
  int high_error_run = 0;
  for (std::size_t it = 0; it < more_iters; ++it) {
    Signal y = st.current_signal();
    GradientResult g = scattering_gradient(y, st.target, st.config);
    if (st.iteration == 0 && st.error_history.empty()) {
      st.initial_error = g.energy;
      st.error_history.push_back(g.energy);
      const double gn = norm2(g.grad);
      if (gn == 0.0) {
        st.last_error = g.energy;
        return st;  // already at a stationary point (e.g. y = fixed point)
      }
      double yn = 0.0;
      for (float vv : st.current) yn += static_cast<double>(vv) * vv;
      st.learning_rate = kLearningRateScale * std::sqrt(yn) / gn;
      if (st.learning_rate <= 0.0) st.learning_rate = kLearningRateScale;
    }
    st.last_error = g.energy;

    // Trial step with momentum; state is re-rounded to float32 so that a
    // checkpoint written here restores it exactly.
    std::vector<float> new_velocity(st.velocity.size());
    std::vector<float> trial(st.current.size());
    for (std::size_t i = 0; i < st.current.size(); ++i) {
      const double v = st.momentum_coeff * st.velocity[i] -
                       st.learning_rate * g.grad[i];
      new_velocity[i] = static_cast<float>(v);
      trial[i] = static_cast<float>(st.current[i] +
                                    static_cast<double>(new_velocity[i]));
    }
    std::vector<double> trial_d(trial.begin(), trial.end());
    const double trial_error =
        scattering_energy(Signal::from_real(trial_d), st.target);

    if (trial_error <= g.energy) {
      st.current = std::move(trial);
      st.velocity = std::move(new_velocity);
      st.learning_rate *= kBoldGrow;
      st.error_history.push_back(trial_error);
      st.last_error = trial_error;
      if (trial_error > 10.0 * st.initial_error) {
        if (++high_error_run >= 5) {
          st.diverged = true;
          ++st.iteration;
          return st;
        }
      } else {
        high_error_run = 0;
      }
    } else {
      std::fill(st.velocity.begin(), st.velocity.end(), 0.0f);
      st.learning_rate *= kBoldShrink;
    }
    ++st.iteration;
  }
  return st;
}

SynthesisState synthesize(const Signal& target_x, const ScatteringConfig& cfg,
                          std::size_t max_iters, std::uint64_t seed) {
  if (max_iters < 1) throw ConfigError("synthesize: max_iters must be >= 1");
  return resume(synthesize_init(target_x, cfg, seed), max_iters);
}

void save_checkpoint(const SynthesisState& st, const std::string& path) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["config"] = {{"transform", to_string(st.config.kind)},
                      {"q_factor", st.config.q_factor},
                      {"t_scale", st.config.t_scale},
                      {"f_octaves", st.config.f_octaves},
                      {"oversampling", st.config.oversampling},
                      {"n_threads", st.config.n_threads}};
  header["iteration"] = st.iteration;
  header["learning_rate"] = st.learning_rate;
  header["momentum_coeff"] = st.momentum_coeff;
  header["initial_error"] = st.initial_error;
  header["last_error"] = st.last_error;
  header["seed"] = st.rng_seed;
  header["length"] = st.current.size();
  header["error_history"] = st.error_history;
  header["diverged"] = st.diverged;
  const std::string hj = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const uint32_t len = static_cast<uint32_t>(hj.size());
  unsigned char b[4] = {static_cast<unsigned char>(len & 0xff),
                        static_cast<unsigned char>((len >> 8) & 0xff),
                        static_cast<unsigned char>((len >> 16) & 0xff),
                        static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
  out.write(hj.data(), static_cast<std::streamsize>(hj.size()));
  out.write(reinterpret_cast<const char*>(st.current.data()),
            static_cast<std::streamsize>(st.current.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(st.velocity.data()),
            static_cast<std::streamsize>(st.velocity.size() * sizeof(float)));
  if (!out) throw IoError("short write: " + path);
}

SynthesisState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw MalformedFileError(path + ": missing header length");
  const uint32_t len = static_cast<uint32_t>(b[0]) |
                       (static_cast<uint32_t>(b[1]) << 8) |
                       (static_cast<uint32_t>(b[2]) << 16) |
                       (static_cast<uint32_t>(b[3]) << 24);
  std::string hj(len, '\0');
  in.read(hj.data(), len);
  if (!in) throw MalformedFileError(path + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hj);
  } catch (const nlohmann::json::exception&) {
    throw MalformedFileError(path + ": corrupted checkpoint header");
  }

  SynthesisState st;
  try {
    const auto& c = header.at("config");
    st.config.kind = transform_kind_from_string(c.at("transform"));
    st.config.q_factor = c.at("q_factor");
    st.config.t_scale = c.at("t_scale");
    st.config.f_octaves = c.at("f_octaves");
    st.config.oversampling = c.at("oversampling");
    st.config.n_threads = c.at("n_threads");
    st.iteration = header.at("iteration");
    st.learning_rate = header.at("learning_rate");
    st.momentum_coeff = header.at("momentum_coeff");
    st.initial_error = header.at("initial_error");
    st.last_error = header.at("last_error");
    st.rng_seed = header.at("seed");
    st.error_history = header.at("error_history").get<std::vector<double>>();
    st.diverged = header.at("diverged");
    const std::size_t n = header.at("length");
    st.current.resize(n);
    st.velocity.resize(n);
  } catch (const nlohmann::json::exception&) {
    throw MalformedFileError(path + ": corrupted checkpoint fields");
  }
  in.read(reinterpret_cast<char*>(st.current.data()),
          static_cast<std::streamsize>(st.current.size() * sizeof(float)));
  in.read(reinterpret_cast<char*>(st.velocity.data()),
          static_cast<std::streamsize>(st.velocity.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) !=
      st.velocity.size() * sizeof(float))
    throw MalformedFileError(path + ": truncated state buffers");
  return st;
}

}  // namespace wavescat
