#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "wavescat/wavelet_engine.hpp"

using namespace wavescat;

namespace {

std::vector<cplx> random_cvec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(nd(rng), nd(rng));
  return v;
}

std::vector<double> random_rvec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s(0, 0);
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

// A synthetic scalogram over a bank's channels with given row values.
Scalogram make_scalogram(const FilterBank& bank, std::size_t signal_len,
                         int oversampling,
                         const std::function<double(std::size_t r,
                                                    std::size_t t)>& fill) {
  Scalogram X;
  X.q = bank.q_factor;
  X.step = 1;
  X.layout = plan_grid(signal_len, bank.t_scale, oversampling,
                       Boundary::kReflect);
  X.layout.grid_size = bank.grid;
  X.n_uniform = bank.n_octave_wavelets;
  X.rows.resize(bank.size());
  for (std::size_t r = 0; r < bank.size(); ++r) {
    X.rows[r].resize(bank.grid);
    for (std::size_t t = 0; t < bank.grid; ++t) X.rows[r][t] = fill(r, t);
    X.lambdas.push_back(bank.wavelets[r].center_log_freq);
    X.sigmas.push_back(bank.wavelets[r].shape.sigma);
  }
  return X;
}

}  // namespace

TEST_CASE("band_forward subsamples the filtered signal exactly") {
  const std::size_t n = 256;
  std::vector<cplx> u = random_cvec(n, 1);
  std::vector<cplx> spec = fft(u);
  AnalyticFilter f = design_morlet(0.2, 0.03, n);

  std::vector<cplx> full = ops::band_forward(spec, f.response, 1);
  for (std::size_t d : {2UL, 4UL}) {
    std::vector<cplx> sub = ops::band_forward(spec, f.response, d);
    for (std::size_t i = 0; i < sub.size(); ++i)
      CHECK(std::abs(sub[i] - full[i * d]) < 1e-12);
  }
}

TEST_CASE("band adjoint identity <Au, v> = <u, A*v>") {
  const std::size_t n = 512;
  AnalyticFilter f = design_morlet(0.15, 0.02, n);
  for (std::size_t fold : {1UL, 2UL, 8UL}) {
    std::vector<cplx> u = random_cvec(n, 2);
    std::vector<cplx> v = random_cvec(n / fold, 3);
    std::vector<cplx> au = ops::band_forward(u, f.response, fold);
    std::vector<cplx> atv(n, cplx(0, 0));
    ops::band_adjoint_accum(v, f.response, fold, atv);
    const cplx lhs = inner(au, v);
    const cplx rhs = inner(u, atv);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("pad adjoint identity") {
  GridLayout layout;
  layout.signal_len = 100;
  layout.pad_left = 64;
  layout.grid_size = 256;
  layout.frame_step = 32;
  std::vector<cplx> x = random_cvec(100, 4);
  std::vector<cplx> g = random_cvec(256, 5);
  std::vector<cplx> px = ops::pad_signal(x, layout, Boundary::kReflect);
  std::vector<cplx> ptg;
  ops::pad_adjoint(g, layout, Boundary::kReflect, ptg);
  CHECK(std::abs(inner(px, g) - inner(x, ptg)) <=
        1e-12 * std::abs(inner(px, g)));
}

TEST_CASE("row_axis_convolve is self-adjoint for real responses") {
  const std::size_t rows = 12, cols = 16;
  FrequencyBank fb = build_frequency_bank(2.0, 4, rows);
  auto mk = [&](unsigned seed) {
    std::vector<std::vector<cplx>> a(rows);
    for (std::size_t r = 0; r < rows; ++r) a[r] = random_cvec(cols, seed + r);
    return a;
  };
  std::vector<std::vector<cplx>> u = mk(10), v = mk(50);
  std::vector<std::vector<cplx>> au = u, atv = v;
  ops::row_axis_convolve(au, fb.wavelets[0].response);
  ops::row_axis_convolve(atv, fb.wavelets[0].response);
  cplx lhs(0, 0), rhs(0, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    lhs += inner(au[r], v[r]);
    rhs += inner(u[r], atv[r]);
  }
  CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
}

TEST_CASE("scalogram of zero is zero, of a tone is constant") {
  FilterBank bank = build_first_order_bank(4, 256, 8192);
  Signal zero = Signal::from_real(std::vector<double>(2048, 0.0));
  Scalogram sz = scalogram_direct(zero, bank, 1);
  for (const auto& row : sz.rows)
    for (double v : row) CHECK(v == 0.0);

  const std::size_t target_row = 6;
  const double f0 = bank.wavelets[target_row].center_freq;
  std::vector<cplx> tone(2048);
  for (std::size_t i = 0; i < tone.size(); ++i) {
    const double ang = 2.0 * M_PI * f0 * static_cast<double>(i);
    tone[i] = cplx(std::cos(ang), std::sin(ang));
  }
  Scalogram st = scalogram_direct(Signal::from_complex(tone), bank, 1);
  const std::size_t c0 = st.first_signal_col();
  const std::size_t nc = st.n_signal_cols();
  double lo = 1e9, hi = 0.0;
  for (std::size_t i = nc / 4; i < 3 * nc / 4; ++i) {
    lo = std::min(lo, st.rows[target_row][c0 + i]);
    hi = std::max(hi, st.rows[target_row][c0 + i]);
  }
  CHECK(hi - lo <= 1e-6 * hi);
  std::size_t best = 0;
  for (std::size_t r = 0; r < st.n_rows(); ++r)
    if (st.rows[r][c0 + nc / 2] > st.rows[best][c0 + nc / 2]) best = r;
  CHECK(best == target_row);
}

TEST_CASE("impulse envelope equals the filter magnitude (time oracle)") {
  FilterBank bank = build_first_order_bank(2, 64, 4096);
  std::vector<double> x(1024, 0.0);
  x[512] = 1.0;
  Scalogram sc = scalogram_direct(Signal::from_real(x), bank, 4);
  REQUIRE(sc.step == 1);
  const std::size_t row = 2;
  std::vector<cplx> taps = bank.wavelets[row].time_taps();
  const long impulse_pos = static_cast<long>(sc.layout.pad_left) + 512;
  for (long off = -200; off <= 200; off += 17) {
    const long t = impulse_pos + off;
    const std::size_t tap_idx = static_cast<std::size_t>((off % 4096 + 4096) % 4096);
    const double want = std::abs(taps[tap_idx]);
    const double got = sc.rows[row][static_cast<std::size_t>(t)];
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("cascade matches the direct backend") {
  FilterBank bank = build_first_order_bank(8, 512, 8192);  // J = 6
  std::vector<cplx> w = random_cvec(8192, 11);
  fft_inplace(w);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double f = (k <= 4096) ? k / 8192.0 : k / 8192.0 - 1.0;
    if (std::abs(f) < 0.02 || std::abs(f) > 0.4) w[k] = 0;
  }
  ifft_inplace(w);
  std::vector<double> xr(2048);
  for (std::size_t i = 0; i < xr.size(); ++i) xr[i] = w[i].real();
  Signal x = Signal::from_real(std::move(xr));

  Scalogram direct = scalogram_direct(x, bank, 1);
  Scalogram cascade = scalogram_cascade(x, bank, 1);
  REQUIRE(direct.step == cascade.step);

  double peak = 0.0;
  for (const auto& row : direct.rows)
    for (double v : row) peak = std::max(peak, v);
  double max_dev = 0.0;
  for (std::size_t r = 0; r < direct.n_rows(); ++r)
    for (std::size_t i = 0; i < direct.rows[r].size(); ++i)
      max_dev = std::max(max_dev,
                         std::abs(direct.rows[r][i] - cascade.rows[r][i]));
  CHECK(max_dev / peak <= 1e-2);
}

TEST_CASE("cascade output shares the direct backend's grid") {
  FilterBank bank = build_first_order_bank(1, 64, 2048);
  std::vector<double> x(512, 0.0);
  x[256] = 1.0;
  Scalogram cascade = scalogram_cascade(Signal::from_real(x), bank, 1);
  Scalogram direct = scalogram_direct(Signal::from_real(x), bank, 1);
  REQUIRE(cascade.n_rows() == direct.n_rows());
  for (std::size_t r = 0; r < cascade.n_rows(); ++r)
    CHECK(cascade.rows[r].size() == direct.rows[r].size());
}

TEST_CASE("shift covariance on the periodic topology") {
  FilterBank bank = build_first_order_bank(4, 128, 1024);
  std::vector<double> x = random_rvec(1024, 21);
  std::vector<double> xs(1024);
  const std::size_t c = 64;
  for (std::size_t i = 0; i < 1024; ++i) xs[i] = x[(i + 1024 - c) % 1024];

  Scalogram a = scalogram_direct(Signal::from_real(x), bank, 2,
                                 Boundary::kPeriodic);
  Scalogram b = scalogram_direct(Signal::from_real(xs), bank, 2,
                                 Boundary::kPeriodic);
  REQUIRE(c % a.step == 0);
  const std::size_t shift_cols = c / a.step;
  for (std::size_t r = 0; r < a.n_rows(); ++r)
    for (std::size_t i = 0; i < a.rows[r].size(); ++i)
      CHECK(b.rows[r][(i + shift_cols) % a.rows[r].size()] ==
            doctest::Approx(a.rows[r][i]).epsilon(1e-9));
}

TEST_CASE("lowpass has unit DC gain and flattens impulse trains") {
  GridLayout layout = plan_grid(1024, 256, 1, Boundary::kReflect);
  layout.grid_size = 4096;

  std::vector<double> constant(4096, 1.0);
  std::vector<double> frames =
      lowpass_subsample_row(constant, 1, layout, 256.0);
  for (double v : frames) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<double> train(4096, 0.0);
  const std::size_t period = 16;
  for (std::size_t i = 0; i < 4096; i += period) train[i] = 1.0;
  std::vector<double> f2 = lowpass_subsample_row(train, 1, layout, 256.0);
  const double mean = 1.0 / period;
  for (double v : f2) CHECK(std::abs(v - mean) <= 0.05 * mean);
}

TEST_CASE("T = signal length gives a single frame at oversampling 0") {
  GridLayout layout = plan_grid(2048, 2048, 0, Boundary::kReflect);
  CHECK(layout.frame_step == 2048);
  CHECK(layout.n_frames() == 1);
}

TEST_CASE("signal longer than the grid is rejected with advice") {
  FilterBank bank = build_first_order_bank(2, 64, 1024);
  Signal x = Signal::from_real(random_rvec(4096, 9));
  CHECK_THROWS_WITH_AS(scalogram_direct(x, bank, 1),
                       doctest::Contains("blocks"), GridError);
}

TEST_CASE("joint convolution: constant scalogram nulls band-pass filters") {
  FilterBank first = build_first_order_bank(4, 256, 4096);
  Scalogram X = make_scalogram(first, 1024, 1,
                               [](std::size_t, std::size_t) { return 1.0; });
  FilterBank second = build_second_order_bank(256, 4096);
  FrequencyBank fb = build_frequency_bank(2.0, 4, X.n_uniform);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);

  double peak_band = 0.0;
  for (const auto& w : joint) {
    if (w.ell == kEllLowpass) continue;
    JointResponse jr = joint_convolve_modulus(X, w, second, 1);
    for (const auto& row : jr.rows)
      for (double v : row) peak_band = std::max(peak_band, v);
  }
  CHECK(peak_band <= 1e-8);
}

TEST_CASE("joint convolution peaks at the pattern's quefrency") {
  FilterBank first = build_first_order_bank(8, 256, 4096);
  FrequencyBank fb = build_frequency_bank(2.0, 8, first.n_octave_wavelets);
  FilterBank second = build_second_order_bank(256, 4096);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);

  const double nu_row = fb.quefrency(1) / 8.0;  // cycles per row
  Scalogram X = make_scalogram(
      first, 1024, 1, [&](std::size_t r, std::size_t) {
        return 1.0 +
               0.5 * std::cos(2.0 * M_PI * nu_row * static_cast<double>(r));
      });

  const std::size_t mu = second.size() - 1;  // most DC-friendly carrier
  double best_v = -1.0;
  int best_ell = -99;
  for (const auto& w : joint) {
    if (w.mu_index != mu || w.ell == kEllLowpass) continue;
    JointResponse jr = joint_convolve_modulus(X, w, second, 1);
    double acc = 0.0;
    for (const auto& row : jr.rows)
      for (double v : row) acc += v * v;
    if (acc > best_v) {
      best_v = acc;
      best_ell = w.ell;
    }
  }
  CHECK(best_ell == 1);
}

TEST_CASE("separable result equals a full 2-D circular convolution") {
  FilterBank first = build_first_order_bank(2, 32, 256);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Scalogram X = make_scalogram(first, 128, 4,
                               [&](std::size_t, std::size_t) {
                                 return std::abs(nd(rng));
                               });

  FilterBank second = build_second_order_bank(32, 256);
  FrequencyBank fb = build_frequency_bank(1.0, 2, X.n_uniform);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);
  const JointWavelet& w = joint[0];

  JointResponse jr = joint_convolve_modulus(X, w, second, 4);
  REQUIRE(jr.step == 1);

  const std::size_t mg = w.freq_axis_response.size();
  const std::size_t n = 256;
  std::vector<std::vector<cplx>> grid(mg, std::vector<cplx>(n, cplx(0, 0)));
  for (std::size_t r = 0; r < X.n_uniform; ++r)
    for (std::size_t i = 0; i < n; ++i) grid[r][i] = X.rows[r][i];
  for (auto& row : grid) fft_inplace(row);
  for (std::size_t r = 0; r < mg; ++r)
    for (std::size_t k = 0; k < n; ++k)
      grid[r][k] *= second.wavelets[w.mu_index].response[k];
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<cplx> col(mg);
    for (std::size_t r = 0; r < mg; ++r) col[r] = grid[r][k];
    fft_inplace(col);
    for (std::size_t r = 0; r < mg; ++r) col[r] *= w.freq_axis_response[r];
    ifft_inplace(col);
    for (std::size_t r = 0; r < mg; ++r) grid[r][k] = col[r];
  }
  for (auto& row : grid) ifft_inplace(row);

  double max_dev = 0.0, peak = 0.0;
  for (std::size_t r = 0; r < X.n_uniform; ++r)
    for (std::size_t i = 0; i < n; ++i) {
      peak = std::max(peak, std::abs(grid[r][i]));
      max_dev = std::max(max_dev,
                         std::abs(std::abs(grid[r][i]) - jr.rows[r][i]));
    }
  CHECK(max_dev <= 1e-10 * peak);
}

TEST_CASE("m-axis reversal commutes with a spin flip") {
  FilterBank first = build_first_order_bank(4, 64, 512);
  FilterBank second = build_second_order_bank(64, 512);
  FrequencyBank fb = build_frequency_bank(2.0, 4, first.n_octave_wavelets);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  Scalogram X = make_scalogram(first, 256, 4,
                               [&](std::size_t, std::size_t) {
                                 return std::abs(nd(rng));
                               });

  const std::size_t mg = joint[0].freq_axis_response.size();
  Scalogram Xr = X;
  for (std::size_t r = 0; r < X.n_uniform; ++r) {
    const std::size_t src = (mg - r) % mg;
    Xr.rows[r] = (src < X.n_uniform) ? X.rows[src]
                                     : std::vector<double>(512, 0.0);
  }

  const JointWavelet& plus = joint[0];
  const JointWavelet& minus = joint[1];
  REQUIRE(plus.ell == minus.ell);
  JointResponse a = joint_convolve_modulus(Xr, plus, second, 4);
  JointResponse b = joint_convolve_modulus(X, minus, second, 4);
  double peak = 0.0, max_dev = 0.0;
  for (std::size_t r = 0; r < X.n_uniform; ++r) {
    const std::size_t src = (mg - r) % mg;
    if (src >= X.n_uniform) continue;
    for (std::size_t i = 0; i < a.rows[r].size(); ++i) {
      peak = std::max(peak, b.rows[src][i]);
      max_dev = std::max(max_dev, std::abs(a.rows[r][i] - b.rows[src][i]));
    }
  }
  CHECK(max_dev <= 1e-10 * peak);
}

TEST_CASE("first stage is non-expansive up to the declared delta") {
  FilterBank bank = build_first_order_bank(8, 256, 2048);
  std::vector<cplx> w = random_cvec(2048, 33);
  fft_inplace(w);
  for (std::size_t k = 1025; k < 2048; ++k) w[k] = 0;  // analytic noise
  ifft_inplace(w);
  Signal x = Signal::from_complex(std::move(w));
  x.real_valued = false;

  double in_energy = 0.0;
  for (const cplx& v : x.samples) in_energy += std::norm(v);

  Scalogram sc = scalogram_direct(x, bank, 1, Boundary::kPeriodic);
  double out_energy = 0.0;
  for (const auto& row : sc.rows)
    for (double v : row) out_energy += v * v * static_cast<double>(sc.step);
  std::vector<cplx> spec = fft(x.samples);
  std::vector<cplx> low = ops::band_forward(spec, bank.lowpass.response, 1);
  for (const cplx& v : low) out_energy += std::norm(v);

  CHECK(out_energy <= (1.0 + bank.delta) * in_energy * 1.0001);
}
