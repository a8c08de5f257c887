#include "wavescat/filter_design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "json.hpp"
#include "wavescat/errors.hpp"

namespace wavescat {

namespace {

constexpr double kTwoSqrtLn2 = 1.6651092223153954;  // 2 sqrt(ln 2)

// Bandpass sigma so that adjacent filters spaced by 2^{-1/Q} cross at -3 dB.
// With sigma proportional to the center frequency the crossing point is not
// the midpoint; solving |g^_hi| = |g^_lo| = 2^{-1/2} gives
// sigma = center (1-r) / ((1+r) sqrt(ln 2)).
double bandpass_sigma(double center, int q) {
  const double ratio = std::pow(2.0, -1.0 / q);
  return center * (1.0 - ratio) /
         ((1.0 + ratio) * std::sqrt(std::log(2.0)));
}

double bin_freq(std::size_t i, std::size_t n) {
  return (i <= n / 2) ? static_cast<double>(i) / n
                      : static_cast<double>(i) / n - 1.0;
}

}  // namespace

double lowpass_sigma_for_width(double width) { return width / kTwoSqrtLn2; }

double GaborShape::eval(double freq) const {
  const double s2 = 2.0 * sigma * sigma;
  const double main = std::exp(-(freq - center) * (freq - center) / s2);
  if (correction == 0.0) return amplitude * main;
  return amplitude * (main - correction * std::exp(-freq * freq / s2));
}

double AnalyticFilter::negative_energy_fraction() const {
  const std::size_t n = response.size();
  double neg = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = response[i] * response[i];
    total += e;
    if (bin_freq(i, n) < 0.0) neg += e;
  }
  return total > 0.0 ? neg / total : 0.0;
}

std::vector<cplx> AnalyticFilter::time_taps() const {
  std::vector<cplx> v(response.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = response[i];
  ifft_inplace(v);
  return v;
}

AnalyticFilter design_morlet(double center_freq, double sigma_freq,
                             std::size_t grid_size) {
  if (!(center_freq > 0.0 && center_freq < 0.5))
    throw ConfigError("design_morlet: center frequency must lie in (0, 1/2)");
  if (!is_pow2(grid_size))
    throw ConfigError("design_morlet: grid size must be a power of two");
  if (!(sigma_freq > 0.0))
    throw ConfigError("design_morlet: bandwidth must be positive");

  AnalyticFilter f;
  f.kind = FilterKind::kBandpass;
  f.shape.center = center_freq;
  f.shape.sigma = sigma_freq;
  // Zero-mean condition g^(0) = 0 fixes the correction coefficient.
  f.shape.correction =
      std::exp(-center_freq * center_freq / (2.0 * sigma_freq * sigma_freq));
  f.shape.amplitude = 1.0;

  // Negative-frequency energy of the uncorrected prototype decides
  // admissibility before the analytic clipping below.
  double neg = 0.0, total = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double w = bin_freq(i, grid_size);
    const double v = f.shape.eval(w);
    total += v * v;
    if (w < 0.0) neg += v * v;
  }
  if (total <= 0.0 || neg / total > 1e-3)
    throw ConfigError(
        "design_morlet: parameters leave more than 1e-3 of the energy at "
        "negative frequencies");

  f.response.assign(grid_size, 0.0);
  double peak = 0.0;
  for (std::size_t i = 0; i <= grid_size / 2; ++i) {
    const double v = f.shape.eval(static_cast<double>(i) / grid_size);
    f.response[i] = v;
    peak = std::max(peak, v);
  }
  for (auto& v : f.response) v /= peak;
  f.shape.amplitude = 1.0 / peak;

  f.center_freq = center_freq;
  f.center_log_freq = std::log2(center_freq);
  const double half_width = sigma_freq * kTwoSqrtLn2 / 2.0;
  if (center_freq > half_width)
    f.bandwidth_octaves =
        std::log2((center_freq + half_width) / (center_freq - half_width));
  else
    f.bandwidth_octaves = std::log2(2.0 * center_freq / half_width);
  return f;
}

AnalyticFilter design_gauss_lowpass(double width_samples,
                                    std::size_t grid_size) {
  if (!(width_samples > 0.0))
    throw ConfigError("design_gauss_lowpass: width must be positive");
  if (!is_pow2(grid_size))
    throw ConfigError("design_gauss_lowpass: grid size must be a power of two");

  AnalyticFilter f;
  f.kind = FilterKind::kLowpass;
  const double sigma_t = lowpass_sigma_for_width(width_samples);
  const double sigma_f = 1.0 / (2.0 * M_PI * sigma_t);
  f.shape = GaborShape{0.0, sigma_f, 0.0, 1.0};
  f.response.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i)
    f.response[i] = f.shape.eval(bin_freq(i, grid_size));
  f.center_freq = 0.0;
  f.center_log_freq = -std::numeric_limits<double>::infinity();
  f.bandwidth_octaves = 0.0;
  return f;
}

double FilterBank::littlewood_paley_at(double freq) const {
  const std::size_t n = grid;
  auto at = [&](const AnalyticFilter& f, double w) {
    double wr = w - std::round(w);  // wrap to [-1/2, 1/2)
    long bin = std::lround(wr * static_cast<double>(n));
    long idx = ((bin % static_cast<long>(n)) + static_cast<long>(n)) %
               static_cast<long>(n);
    return f.response[static_cast<std::size_t>(idx)];
  };
  double sum = 0.0;
  for (const auto& w : wavelets) {
    const double a = at(w, freq);
    const double b = at(w, -freq);
    sum += a * a + b * b;
  }
  const double lp = at(lowpass, freq);
  sum += lp * lp;
  return sum;
}

FilterBank build_first_order_bank(int q_factor, double t_scale,
                                  std::size_t grid_size, double delta) {
  if (q_factor < 1)
    throw ConfigError("filter bank: Q must be a positive integer");
  if (t_scale < 2.0 * q_factor)
    throw ConfigError("filter bank: T must be at least 2Q samples");
  if (!is_pow2(grid_size))
    throw ConfigError("filter bank: grid size must be a power of two");
  if (static_cast<double>(grid_size) < t_scale)
    throw GridError("filter bank: grid of " + std::to_string(grid_size) +
                    " cannot support T=" +
                    std::to_string(static_cast<long long>(t_scale)) +
                    "; minimum grid size is " +
                    std::to_string(static_cast<long long>(
                        next_pow2(static_cast<std::size_t>(t_scale)))));

  FilterBank bank;
  bank.q_factor = q_factor;
  bank.t_scale = t_scale;
  bank.grid = grid_size;
  bank.delta = delta;
  bank.j_max = static_cast<int>(std::floor(std::log2(t_scale / q_factor)));

  for (int j = 1; j <= bank.j_max; ++j) {
    for (int k = 0; k < q_factor; ++k) {
      const double lam = -(j - 1) - static_cast<double>(k) / q_factor;
      const double center = kMotherPeakFreq * std::pow(2.0, lam);
      bank.wavelets.push_back(
          design_morlet(center, bandpass_sigma(center, q_factor), grid_size));
    }
  }
  bank.n_octave_wavelets = bank.wavelets.size();

  // Constant-bandwidth fillers below the last wavelet, linearly spaced by its
  // -3 dB width, at most Q-1 of them.
  if (!bank.wavelets.empty() && q_factor > 1) {
    const double f_min = bank.wavelets.back().center_freq;
    const double sigma = bandpass_sigma(f_min, q_factor);
    const double spacing = sigma * kTwoSqrtLn2;
    const int room = static_cast<int>(std::floor(f_min / spacing)) - 1;
    const int n_fill = std::min(q_factor - 1, std::max(0, room));
    for (int i = 1; i <= n_fill; ++i)
      bank.wavelets.push_back(
          design_morlet(f_min - i * spacing, sigma, grid_size));
    bank.n_fillers = static_cast<std::size_t>(n_fill);
  }

  bank.lowpass = design_gauss_lowpass(t_scale, grid_size);
  bank.passband_lo = bank.wavelets.back().center_freq;
  bank.passband_hi = bank.wavelets.front().center_freq;

  // Measure the actual frame flatness over the passband and report it: the
  // declared delta is whichever of the requested tolerance and the measured
  // deviation is larger.
  double max_dev = 0.0;
  for (double w = bank.passband_lo; w <= bank.passband_hi; w *= 1.003)
    max_dev = std::max(max_dev, std::abs(bank.littlewood_paley_at(w) - 1.0));
  bank.delta = std::max(delta, max_dev * 1.02);
  return bank;
}

FilterBank build_second_order_bank(double t_scale, std::size_t grid_size,
                                   double delta) {
  return build_first_order_bank(1, t_scale, grid_size, delta);
}

double FrequencyBank::quefrency(int ell) const {
  return kMotherPeakFreq * std::pow(2.0, ell);
}

FrequencyBank build_frequency_bank(double f_octaves, int q_grid,
                                   std::size_t n_lambda_rows) {
  if (q_grid < 1) throw ConfigError("frequency bank: Q must be positive");
  if (f_octaves < 1.0)
    throw ConfigError("frequency bank: F must be at least one octave");
  const double extent = static_cast<double>(n_lambda_rows) / q_grid;
  if (f_octaves > extent)
    throw GridError("frequency bank: F=" + std::to_string(f_octaves) +
                    " octaves exceeds the log-frequency extent of " +
                    std::to_string(extent) + " octaves");

  FrequencyBank bank;
  bank.q_grid = q_grid;
  bank.f_octaves = f_octaves;
  bank.m_grid = next_pow2(2 * n_lambda_rows);
  bank.ell_min = -static_cast<int>(std::floor(std::log2(f_octaves)));
  bank.ell_max = static_cast<int>(std::floor(std::log2(double(q_grid))));

  for (int ell = bank.ell_min; ell <= bank.ell_max; ++ell) {
    // Center in cycles per row step; rows are spaced 1/Q octave apart.
    const double center = bank.quefrency(ell) / q_grid;
    bank.wavelets.push_back(
        design_morlet(center, bandpass_sigma(center, 1), bank.m_grid));
  }

  const double width_rows = f_octaves * q_grid;
  bank.lowpass_is_identity = width_rows <= 1.0;
  if (bank.lowpass_is_identity) {
    AnalyticFilter id;
    id.kind = FilterKind::kLowpass;
    id.shape = GaborShape{0.0, 0.0, 0.0, 1.0};
    id.response.assign(bank.m_grid, 1.0);
    bank.lowpass = std::move(id);
  } else {
    bank.lowpass = design_gauss_lowpass(width_rows, bank.m_grid);
  }
  return bank;
}

std::vector<JointWavelet> build_joint_filters(const FilterBank& second_order,
                                              const FrequencyBank& freq_bank) {
  if (second_order.q_factor != 1)
    throw ConfigError("joint filters: temporal factors must come from a Q=1 bank");

  const std::size_t m = freq_bank.m_grid;
  auto mirrored = [m](const std::vector<double>& r) {
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = r[(m - i) % m];
    return out;
  };

  std::vector<JointWavelet> joint;
  joint.reserve(second_order.size() * (2 * freq_bank.size() + 1));
  for (std::size_t mi = 0; mi < second_order.size(); ++mi) {
    const AnalyticFilter& g = second_order.wavelets[mi];
    for (std::size_t fi = 0; fi < freq_bank.size(); ++fi) {
      const int ell = freq_bank.ell_min + static_cast<int>(fi);
      const AnalyticFilter& fr = freq_bank.wavelets[fi];
      // Rows are ordered by descending log-frequency, so a wavelet built on
      // positive row frequencies oscillates downward along lambda: that is
      // spin -1.  Spin +1 mirrors the spectrum.
      for (int spin : {+1, -1}) {
        JointWavelet w;
        w.mu_index = mi;
        w.mu_log_freq = g.center_log_freq;
        w.ell = ell;
        w.spin = spin;
        w.quefrency = freq_bank.quefrency(ell);
        w.freq_axis_response =
            (spin == -1) ? fr.response : mirrored(fr.response);
        joint.push_back(std::move(w));
      }
    }
    JointWavelet low;
    low.mu_index = mi;
    low.mu_log_freq = g.center_log_freq;
    low.ell = kEllLowpass;
    low.spin = +1;
    low.quefrency = 0.0;
    low.freq_axis_response = freq_bank.lowpass.response;
    joint.push_back(std::move(low));
  }
  return joint;
}

void write_filter_bank_dump(const FilterBank& bank, const std::string& path) {
  nlohmann::json meta;
  meta["format_version"] = 1;
  meta["q_factor"] = bank.q_factor;
  meta["t_scale"] = bank.t_scale;
  meta["j_max"] = bank.j_max;
  meta["delta"] = bank.delta;
  meta["grid_size"] = bank.grid;
  meta["n_octave_wavelets"] = bank.n_octave_wavelets;
  meta["n_fillers"] = bank.n_fillers;
  meta["taps_file"] = path + ".taps";
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& w : bank.wavelets) {
    filters.push_back({{"center_freq", w.center_freq},
                       {"center_log_freq", w.center_log_freq},
                       {"bandwidth_octaves", w.bandwidth_octaves},
                       {"sigma", w.shape.sigma},
                       {"kind", "bandpass"}});
  }
  filters.push_back({{"center_freq", 0.0},
                     {"sigma", bank.lowpass.shape.sigma},
                     {"kind", "lowpass"}});
  meta["filters"] = filters;

  std::ofstream js(path);
  if (!js) throw IoError("cannot write filter bank dump: " + path);
  js << meta.dump(2) << "\n";

  std::ofstream taps(path + ".taps", std::ios::binary);
  if (!taps) throw IoError("cannot write filter taps: " + path + ".taps");
  auto write_taps = [&taps](const AnalyticFilter& f) {
    for (const cplx& t : f.time_taps()) {
      const float re = static_cast<float>(t.real());
      const float im = static_cast<float>(t.imag());
      taps.write(reinterpret_cast<const char*>(&re), sizeof(float));
      taps.write(reinterpret_cast<const char*>(&im), sizeof(float));
    }
  };
  for (const auto& w : bank.wavelets) write_taps(w);
  write_taps(bank.lowpass);
}

}  // namespace wavescat
