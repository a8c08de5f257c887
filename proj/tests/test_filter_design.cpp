#include <cmath>
#include <complex>
#include <fstream>

#include "doctest.h"
#include "wavescat/errors.hpp"
#include "wavescat/filter_design.hpp"

using namespace wavescat;

namespace {

// Brute-force inverse DFT of the closed-form frequency response at one time
// index; independent of the library's FFT path.
cplx brute_time_tap(const AnalyticFilter& f, std::size_t n) {
  const std::size_t N = f.grid_size();
  cplx acc(0.0, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    const double ang = 2.0 * M_PI * static_cast<double>(k) *
                       static_cast<double>(n) / static_cast<double>(N);
    acc += f.response[k] * cplx(std::cos(ang), std::sin(ang));
  }
  return acc / static_cast<double>(N);
}

}  // namespace

TEST_CASE("morlet is zero mean and peaks at its center") {
  AnalyticFilter f = design_morlet(0.25, 0.02, 1024);
  CHECK(std::abs(f.response[0]) <= 1e-6);  // g^(0) = 0 by construction

  std::size_t peak = 0;
  for (std::size_t i = 1; i < f.response.size(); ++i)
    if (f.response[i] > f.response[peak]) peak = i;
  CHECK(peak == std::lround(0.25 * 1024));
  CHECK(f.response[peak] == doctest::Approx(1.0));
}

TEST_CASE("morlet correction coefficient matches the zero-mean equation") {
  const double center = 0.25, sigma = 0.03;
  AnalyticFilter f = design_morlet(center, sigma, 1024);
  // Solving g^(0) = 0 for the Gabor difference gives the Gaussian ratio.
  const double expected = std::exp(-center * center / (2.0 * sigma * sigma));
  CHECK(f.shape.correction == doctest::Approx(expected).epsilon(1e-12));
  // The sampled response is the closed form on every positive bin.
  for (std::size_t i = 1; i < 512; i += 37)
    CHECK(f.response[i] ==
          doctest::Approx(f.shape.eval(i / 1024.0)).epsilon(1e-12));
  // Library time taps against a direct DFT evaluation of the response.
  std::vector<cplx> taps = f.time_taps();
  for (std::size_t n : {0UL, 1UL, 17UL, 500UL, 1023UL}) {
    const cplx want = brute_time_tap(f, n);
    CHECK(std::abs(taps[n] - want) <= 1e-10);
  }
}

TEST_CASE("morlet rejects designs with heavy negative-frequency energy") {
  CHECK_THROWS_AS(design_morlet(0.01, 0.05, 1024), ConfigError);
  CHECK_THROWS_AS(design_morlet(0.7, 0.02, 1024), ConfigError);
  CHECK_THROWS_AS(design_morlet(0.25, 0.02, 1000), ConfigError);
}

TEST_CASE("first-order bank counts") {
  FilterBank b = build_first_order_bank(8, 4096, 65536);
  CHECK(b.j_max == 9);
  CHECK(b.n_octave_wavelets == 72);  // 8 * log2(4096/8)
  CHECK(b.n_fillers == 7);
  CHECK(b.size() == 72 + b.n_fillers);

  FilterBank tiny = build_first_order_bank(1, 2, 64);
  CHECK(tiny.size() == 1);
  CHECK(tiny.n_fillers == 0);
}

TEST_CASE("second-order bank counts") {
  FilterBank b = build_second_order_bank(1024, 8192);
  CHECK(b.size() == 10);  // log2(1024) wavelets, Q = 1, no fillers
  FilterBank tiny = build_second_order_bank(2, 64);
  CHECK(tiny.size() == 1);
}

TEST_CASE("bank rejects a grid that cannot support T") {
  CHECK_THROWS_WITH_AS(build_first_order_bank(8, 1024, 512),
                       doctest::Contains("minimum grid size is 1024"),
                       GridError);
}

TEST_CASE("bank invariants: analyticity, spacing, duration") {
  FilterBank b = build_first_order_bank(8, 1024, 16384);
  for (const auto& w : b.wavelets) {
    CHECK(w.negative_energy_fraction() <= 1e-6);
    CHECK(std::abs(w.response[0]) <= 1e-6);
    // peak lies within half a bin of the bin nearest the center
    std::size_t peak = 0;
    for (std::size_t i = 1; i < w.response.size(); ++i)
      if (w.response[i] > w.response[peak]) peak = i;
    CHECK(std::llabs(static_cast<long long>(peak) -
                     std::llround(w.center_freq * 16384)) <= 0);
  }
  // duration rule 2^-lambda Q <= T over the octave wavelets, dilation
  // measured from the mother's peak (fillers have constant bandwidth and
  // keep the lowest wavelet's duration instead)
  for (std::size_t r = 0; r < b.n_octave_wavelets; ++r) {
    const auto& w = b.wavelets[r];
    CHECK(kMotherPeakFreq / w.center_freq * b.q_factor <=
          1024.0 * (1.0 + 1e-9));
  }
  // adjacent ratio 2^(-1/Q) within 1% across the octave region
  for (std::size_t i = 0; i + 1 < b.n_octave_wavelets; ++i) {
    const double ratio =
        b.wavelets[i + 1].center_freq / b.wavelets[i].center_freq;
    CHECK(ratio == doctest::Approx(std::pow(2.0, -1.0 / 8)).epsilon(0.01));
  }
}

TEST_CASE("littlewood-paley flatness over the declared passband (oracle)") {
  FilterBank b = build_first_order_bank(8, 4096, 65536);
  double lo = 2.0, hi = 0.0;
  for (double w = b.passband_lo; w <= b.passband_hi; w *= 1.0037) {
    const double lp = b.littlewood_paley_at(w);
    lo = std::min(lo, lp);
    hi = std::max(hi, lp);
  }
  CHECK(lo >= 1.0 - b.delta);
  CHECK(hi <= 1.0 + b.delta);

  FilterBank b2 = build_second_order_bank(1024, 16384);
  lo = 2.0;
  hi = 0.0;
  for (double w = b2.passband_lo; w <= b2.passband_hi; w *= 1.01) {
    const double lp = b2.littlewood_paley_at(w);
    lo = std::min(lo, lp);
    hi = std::max(hi, lp);
  }
  CHECK(lo >= 1.0 - b2.delta);
  CHECK(hi <= 1.0 + b2.delta);
}

TEST_CASE("dilation covariance across octaves") {
  FilterBank b = build_first_order_bank(4, 512, 8192);
  // same suboctave k, one octave apart: the lower filter is the upper one
  // with its frequency axis stretched by two
  const AnalyticFilter& hi = b.wavelets[0];
  const AnalyticFilter& lo = b.wavelets[4];
  double max_rel = 0.0;
  for (std::size_t i = 1; i < 2048; ++i) {
    const double a = lo.response[i];
    const double c = hi.response[2 * i];
    max_rel = std::max(max_rel, std::abs(a - c));
  }
  CHECK(max_rel <= 1e-3);
}

TEST_CASE("frequency bank ell range and count") {
  FrequencyBank fb = build_frequency_bank(4.0, 8, 72);
  CHECK(fb.ell_min == -2);
  CHECK(fb.ell_max == 3);
  CHECK(fb.size() == 6);

  FrequencyBank one = build_frequency_bank(1.0, 1, 10);
  CHECK(one.size() == 1);
  CHECK(one.ell_min == 0);
  CHECK(one.ell_max == 0);

  CHECK_THROWS_AS(build_frequency_bank(16.0, 8, 16), GridError);
}

TEST_CASE("frequency lowpass -3 dB width spans F octaves") {
  FrequencyBank fb = build_frequency_bank(4.0, 8, 96);
  std::vector<cplx> taps = fb.lowpass.time_taps();
  const double peak = std::abs(taps[0]);
  // count contiguous rows around zero where |phi| >= peak/sqrt(2)
  std::size_t half = 0;
  while (half + 1 < taps.size() / 2 &&
         std::abs(taps[half + 1]) >= peak / std::sqrt(2.0))
    ++half;
  const double width_octaves = (2.0 * half + 1.0) / fb.q_grid;
  CHECK(width_octaves == doctest::Approx(4.0).epsilon(0.10));
}

TEST_CASE("joint filter product counts and the flat renumbering") {
  FilterBank second = build_second_order_bank(1024, 8192);  // 10 mu values
  FrequencyBank fb = build_frequency_bank(4.0, 8, 72);      // 6 ell values
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);
  CHECK(joint.size() == 10 * (6 * 2 + 1));

  // per-mu block: (ell asc x spins), lowpass row last, spin +1 only
  for (std::size_t mi = 0; mi < 10; ++mi) {
    const JointWavelet& low = joint[mi * 13 + 12];
    CHECK(low.ell == kEllLowpass);
    CHECK(low.spin == 1);
  }
}

TEST_CASE("spin reflection mirrors the frequency-axis spectrum") {
  FilterBank second = build_second_order_bank(256, 4096);
  FrequencyBank fb = build_frequency_bank(2.0, 8, 48);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);
  const JointWavelet& plus = joint[0];
  const JointWavelet& minus = joint[1];
  REQUIRE(plus.spin == 1);
  REQUIRE(minus.spin == -1);
  REQUIRE(plus.ell == minus.ell);
  const std::size_t m = plus.freq_axis_response.size();
  for (std::size_t i = 0; i < m; ++i)
    CHECK(minus.freq_axis_response[i] ==
          doctest::Approx(plus.freq_axis_response[(m - i) % m]));
}

TEST_CASE("realized 2-D taps equal the separable product (brute force)") {
  FilterBank second = build_second_order_bank(64, 512);
  FrequencyBank fb = build_frequency_bank(2.0, 4, 24);
  std::vector<JointWavelet> joint = build_joint_filters(second, fb);
  const JointWavelet& w = joint[2];
  const AnalyticFilter& g = second.wavelets[w.mu_index];

  AnalyticFilter fr_filter;
  fr_filter.response = w.freq_axis_response;

  // library route: separable product of the two inverse transforms
  std::vector<cplx> tt = g.time_taps();
  std::vector<cplx> tf = fr_filter.time_taps();
  // brute-force route: direct DFT sums of the closed-form responses
  for (std::size_t n : {0UL, 3UL, 100UL}) {
    for (std::size_t m : {0UL, 1UL, 7UL}) {
      const cplx lib = tt[n] * tf[m];
      const cplx brute = brute_time_tap(g, n) * brute_time_tap(fr_filter, m);
      CHECK(std::abs(lib - brute) <= 1e-10);
    }
  }
}

TEST_CASE("filter bank dump writes metadata and taps") {
  FilterBank b = build_first_order_bank(2, 64, 1024);
  const std::string path = "/tmp/wavescat_test_bank.json";
  write_filter_bank_dump(b, path);
  std::ifstream js(path);
  CHECK(js.good());
  std::ifstream taps(path + ".taps", std::ios::binary);
  CHECK(taps.good());
  taps.seekg(0, std::ios::end);
  CHECK(static_cast<std::size_t>(taps.tellg()) ==
        (b.size() + 1) * 1024 * 2 * sizeof(float));
}
