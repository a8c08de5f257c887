#include <random>

#include "doctest.h"
#include "wavescat/fft.hpp"

using namespace wavescat;

TEST_CASE("fft/ifft round trip") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(256);
  for (auto& x : v) x = cplx(nd(rng), nd(rng));
  std::vector<cplx> w = ifft(fft(v));
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(std::abs(w[i] - v[i]) < 1e-12);
}

TEST_CASE("fft of an impulse is flat") {
  std::vector<cplx> v(64, cplx(0, 0));
  v[0] = 1.0;
  std::vector<cplx> s = fft(v);
  for (const cplx& x : s) CHECK(std::abs(x - cplx(1.0, 0.0)) < 1e-13);
}

TEST_CASE("parseval") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<cplx> v(128);
  double te = 0.0;
  for (auto& x : v) {
    x = cplx(nd(rng), nd(rng));
    te += std::norm(x);
  }
  std::vector<cplx> s = fft(v);
  double fe = 0.0;
  for (const cplx& x : s) fe += std::norm(x);
  CHECK(fe / 128.0 == doctest::Approx(te).epsilon(1e-12));
}

TEST_CASE("pow2 helpers") {
  CHECK(next_pow2(1) == 1);
  CHECK(next_pow2(5) == 8);
  CHECK(next_pow2(1024) == 1024);
  CHECK(is_pow2(64));
  CHECK(!is_pow2(48));
}
