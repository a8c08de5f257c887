#pragma once

#include <cmath>
#include <vector>

#include "wavescat/errors.hpp"
#include "wavescat/fft.hpp"

namespace wavescat {

struct Signal {
  std::vector<cplx> samples;
  double sample_rate = 1.0;  // informational; internal scales are in samples
  bool real_valued = true;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.size() < 2)
      throw ConfigError("signal: length must be at least 2");
    for (const cplx& s : samples)
      if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
        throw NumericError("signal", "non-finite sample");
  }

  static Signal from_real(std::vector<double> v, double rate = 1.0) {
    Signal s;
    s.samples.reserve(v.size());
    for (double x : v) s.samples.emplace_back(x, 0.0);
    s.sample_rate = rate;
    s.real_valued = true;
    return s;
  }

  static Signal from_complex(std::vector<cplx> v, double rate = 1.0) {
    Signal s;
    s.samples = std::move(v);
    s.sample_rate = rate;
    s.real_valued = false;
    return s;
  }

  std::vector<double> real_part() const {
    std::vector<double> v(samples.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = samples[i].real();
    return v;
  }
};

}  // namespace wavescat
