#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "wavescat/chirp_lab.hpp"
#include "wavescat/feature_archive.hpp"
#include "wavescat/scattering.hpp"
#include "wavescat/synthesis.hpp"
#include "wavescat/wav_io.hpp"

namespace ws = wavescat;

namespace {

// Exit codes, also documented in the README:
//   0 success, 2 usage, 3 malformed input file, 4 unsupported encoding,
//   5 bad configuration, 6 grid/size mismatch, 7 numeric failure, 1 other.
enum ExitCode {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kMalformed = 3,
  kUnsupported = 4,
  kConfig = 5,
  kGrid = 6,
  kNumeric = 7,
};

struct CommonFlags {
  std::string transform = "joint";
  int q = 8;
  double t_ms = 32.0;
  double t_samples = 0.0;  // overrides t_ms when set
  double f_octaves = 2.0;
  int oversampling = 1;
  bool log_output = false;
  bool transpose_invariant = false;
  int threads = 1;
  std::string config_file;
};

// Optional key-value config file; explicit command-line flags win.
void load_config_file(const std::string& path, CommonFlags& flags,
                      std::map<std::string, std::string>& extra) {
  std::ifstream in(path);
  if (!in) throw ws::IoError("cannot open config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::string key, value;
    const auto eq = line.find_first_of("= \t");
    if (eq == std::string::npos) continue;
    key = line.substr(0, eq);
    value = line.substr(line.find_first_not_of("= \t", eq));
    if (key == "transform") flags.transform = value;
    else if (key == "Q") flags.q = std::stoi(value);
    else if (key == "T-ms") flags.t_ms = std::stod(value);
    else if (key == "T-samples") flags.t_samples = std::stod(value);
    else if (key == "F") flags.f_octaves = std::stod(value);
    else if (key == "oversampling") flags.oversampling = std::stoi(value);
    else if (key == "log") flags.log_output = (value == "1" || value == "true");
    else if (key == "transpose-invariant")
      flags.transpose_invariant = (value == "1" || value == "true");
    else if (key == "threads") flags.threads = std::stoi(value);
    else extra[key] = value;
  }
}

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--transform", flags.transform,
                  "Transform kind: mel, time or joint");
  cmd->add_option("--Q", flags.q, "Wavelets per octave");
  cmd->add_option("--T-ms", flags.t_ms,
                  "Averaging scale in milliseconds (uses the WAV rate)");
  cmd->add_option("--T-samples", flags.t_samples,
                  "Averaging scale in samples (overrides --T-ms)");
  cmd->add_option("--F", flags.f_octaves, "Frequency scale in octaves");
  cmd->add_option("--oversampling", flags.oversampling, "Oversampling factor");
  cmd->add_flag("--log", flags.log_output, "Apply the log transform");
  cmd->add_flag("--transpose-invariant", flags.transpose_invariant,
                "Apply the transposition-invariant variant");
  cmd->add_option("--threads", flags.threads,
                  "Worker threads (1 = deterministic reference mode)");
  cmd->add_option("--config", flags.config_file,
                  "Key-value config file; flags win on conflict")
      ->check(CLI::ExistingFile);
}

ws::ScatteringConfig make_config(const CommonFlags& flags, double sample_rate) {
  ws::ScatteringConfig cfg;
  cfg.kind = ws::transform_kind_from_string(flags.transform);
  cfg.q_factor = flags.q;
  cfg.t_scale = flags.t_samples > 0.0
                    ? flags.t_samples
                    : flags.t_ms * sample_rate / 1000.0;
  cfg.f_octaves = flags.f_octaves;
  cfg.oversampling = flags.oversampling;
  cfg.n_threads = flags.threads;
  return cfg;
}

void remove_partial(const std::string& path) {
  std::error_code ec;
  std::filesystem::remove(path, ec);
}

int run_extract(const CommonFlags& flags, const std::string& input,
                const std::string& output) {
  ws::Signal x = ws::read_wav(input);
  ws::ScatteringConfig cfg = make_config(flags, x.sample_rate);
  ws::ScatteringOutput out = ws::scattering_transform(x, cfg);
  if (flags.transpose_invariant) out = ws::transposition_invariant(out, cfg);
  if (flags.log_output) out = ws::log_scattering(out);
  try {
    ws::write_archive(ws::archive_from_output(out, input), output);
  } catch (...) {
    remove_partial(output);
    throw;
  }
  return kOk;
}

int run_synth(const CommonFlags& flags, const std::string& input,
              const std::string& output, std::size_t iters,
              std::uint64_t seed, const std::string& checkpoint,
              const std::string& resume_from) {
  ws::Signal x = ws::read_wav(input);
  ws::ScatteringConfig cfg = make_config(flags, x.sample_rate);

  ws::SynthesisState state;
  if (!resume_from.empty()) {
    state = ws::load_checkpoint(resume_from);
    state.config.n_threads = flags.threads;
    state.target = ws::scattering_transform(x, state.config);
  } else {
    state = ws::synthesize_init(x, cfg, seed);
  }
  state = ws::resume(std::move(state), iters);
  if (!checkpoint.empty()) ws::save_checkpoint(state, checkpoint);

  try {
    ws::write_wav(output, state.current_signal(),
                  static_cast<int>(x.sample_rate));
  } catch (...) {
    remove_partial(output);
    throw;
  }
  const double target_norm = state.target.norm_sq();
  std::fprintf(stderr, "iterations=%zu final_E=%.6g E/||Phi x||^2=%.6g%s\n",
               state.iteration, state.last_error,
               target_norm > 0 ? state.last_error / target_norm : 0.0,
               state.diverged ? " (diverged)" : "");
  return state.diverged ? kNumeric : kOk;
}

int run_chirp_report(const CommonFlags& flags, double alpha,
                     std::size_t duration, double time_unit,
                     const std::string& output) {
  ws::ChirpSpec spec;
  spec.alpha = alpha;
  spec.duration = duration;
  spec.time_unit = time_unit;
  ws::Signal x = ws::exponential_chirp(spec);

  ws::ScatteringConfig cfg = make_config(flags, 1.0);
  cfg.kind = ws::TransformKind::kJoint;
  ws::ScatteringOutput out = ws::scattering_transform(x, cfg);

  std::ofstream csv(output);
  if (!csv) throw ws::IoError("cannot write " + output);
  csv << "frame,lambda_row,lambda,mu_log_freq,ell,spin,alpha_hat,"
         "alpha_hat_per_unit\n";
  const double a = spec.alpha_per_sample();
  for (std::size_t row = 0; row < out.n_uniform; ++row) {
    const double f_lambda = std::pow(2.0, out.s1_lambdas[row]);
    const double t0 =
        (out.s1_lambdas[row] - std::log2(spec.start_freq())) / a;
    if (t0 < 0.0 || t0 >= static_cast<double>(duration)) continue;
    const std::size_t frame = std::min(
        out.n_frames - 1,
        static_cast<std::size_t>(t0 / static_cast<double>(out.frame_step)));
    (void)f_lambda;
    try {
      ws::ChirpRateEstimate est = ws::estimate_chirp_rate(out, frame, row);
      csv << frame << ',' << row << ',' << out.s1_lambdas[row] << ','
          << out.mu_log_freqs[est.mu_index] << ',' << est.ell << ','
          << est.spin << ',' << est.alpha_hat << ','
          << est.alpha_hat * time_unit << "\n";
    } catch (const ws::NumericError&) {
      // quiet rows are skipped
    }
  }
  return kOk;
}

int run_plot_data(const CommonFlags& flags, const std::string& input,
                  double chirp_alpha, std::size_t chirp_duration,
                  double chirp_time_unit, bool scalogram_matrix,
                  const std::string& joint_slice, const std::string& output) {
  ws::Signal x;
  double rate = 1.0;
  if (!input.empty()) {
    x = ws::read_wav(input);
    rate = x.sample_rate;
  } else if (chirp_duration > 0) {
    ws::ChirpSpec spec;
    spec.alpha = chirp_alpha;
    spec.duration = chirp_duration;
    spec.time_unit = chirp_time_unit;
    x = ws::exponential_chirp(spec);
  } else {
    throw ws::ConfigError("plot-data: provide --input or --chirp-duration");
  }

  ws::ScatteringConfig cfg = make_config(flags, rate);
  std::ofstream csv(output);
  if (!csv) throw ws::IoError("cannot write " + output);

  if (scalogram_matrix) {
    ws::TransformPlan plan = ws::build_transform_plan(cfg, x.size());
    ws::Scalogram sc = ws::scalogram_direct(x, plan.first, cfg.oversampling,
                                            cfg.boundary, cfg.n_threads);
    auto region = sc.signal_region();
    csv << "lambda";
    for (std::size_t c = 0; c < region[0].size(); ++c)
      csv << ",t" << c * sc.step;
    csv << "\n";
    for (std::size_t r = 0; r < region.size(); ++r) {
      csv << sc.lambdas[r];
      for (double v : region[r]) csv << ',' << v;
      csv << "\n";
    }
    return kOk;
  }

  if (!joint_slice.empty()) {
    std::size_t frame = 0, row = 0;
    if (std::sscanf(joint_slice.c_str(), "%zu,%zu", &frame, &row) != 2)
      throw ws::ConfigError("plot-data: --joint-slice expects frame,row");
    cfg.kind = ws::TransformKind::kJoint;
    ws::ScatteringOutput out = ws::scattering_transform(x, cfg);
    csv << "mu_log_freq,ell,spin,value\n";
    for (std::size_t p = 0; p < out.s2.size(); ++p) {
      const ws::PathKey& k = out.s2_paths[p];
      if (static_cast<std::size_t>(k.lambda_index) != row) continue;
      csv << out.mu_log_freqs[k.mu_index] << ','
          << (k.ell == ws::kEllLowpass ? std::string("lowpass")
                                       : std::to_string(k.ell))
          << ',' << k.spin << ',' << out.s2[p][frame] << "\n";
    }
    return kOk;
  }
  throw ws::ConfigError("plot-data: nothing selected");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavescat: wavelet scalograms, scattering transforms, texture "
               "synthesis and chirp analysis"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string input, output, checkpoint, resume_from, joint_slice;
  std::size_t iters = 100;
  std::uint64_t seed = 0;
  double chirp_alpha = 4.0, chirp_time_unit = 8192.0;
  std::size_t chirp_duration = 0;
  bool scalogram_matrix = false;

  CLI::App* extract = app.add_subcommand("extract", "WAV to feature archive");
  add_common_flags(extract, flags);
  extract->add_option("--input", input, "Input WAV")->required();
  extract->add_option("--output", output, "Output archive")->required();

  CLI::App* synth = app.add_subcommand("synth", "Texture synthesis");
  add_common_flags(synth, flags);
  synth->add_option("--input", input, "Target WAV")->required();
  synth->add_option("--output", output, "Synthesized WAV")->required();
  synth->add_option("--iters", iters, "Gradient iterations");
  synth->add_option("--seed", seed, "Init noise seed");
  synth->add_option("--checkpoint", checkpoint, "Write a checkpoint here");
  synth->add_option("--resume", resume_from, "Resume from this checkpoint");

  CLI::App* chirp = app.add_subcommand("chirp-report",
                                       "Ridge sweep of an exponential chirp");
  add_common_flags(chirp, flags);
  chirp->add_option("--alpha", chirp_alpha, "Chirp rate, octaves per unit");
  chirp->add_option("--duration", chirp_duration, "Samples")->required();
  chirp->add_option("--time-unit", chirp_time_unit, "Samples per unit");
  chirp->add_option("--output", output, "CSV path")->required();

  CLI::App* plot = app.add_subcommand("plot-data", "CSV matrices for plots");
  add_common_flags(plot, flags);
  plot->add_option("--input", input, "Input WAV");
  plot->add_flag("--scalogram", scalogram_matrix, "Dump the scalogram");
  plot->add_option("--joint-slice", joint_slice,
                   "frame,row joint coefficient slice");
  plot->add_option("--chirp-alpha", chirp_alpha, "Generate a chirp instead");
  plot->add_option("--chirp-duration", chirp_duration, "Chirp samples");
  plot->add_option("--chirp-time-unit", chirp_time_unit, "Samples per unit");
  plot->add_option("--output", output, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    std::map<std::string, std::string> extra;
    if (!flags.config_file.empty())
      load_config_file(flags.config_file, flags, extra);
    // Flags win over the config file: re-parse the command line on top.
    try {
      app.clear();
      app.parse(argc, argv);
    } catch (const CLI::ParseError&) {
      return kUsage;
    }

    if (extract->parsed()) return run_extract(flags, input, output);
    if (synth->parsed())
      return run_synth(flags, input, output, iters, seed, checkpoint,
                       resume_from);
    if (chirp->parsed())
      return run_chirp_report(flags, chirp_alpha, chirp_duration,
                              chirp_time_unit, output);
    if (plot->parsed())
      return run_plot_data(flags, input, chirp_alpha, chirp_duration,
                           chirp_time_unit, scalogram_matrix, joint_slice,
                           output);
    return kUsage;
  } catch (const ws::UnsupportedFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUnsupported;
  } catch (const ws::MalformedFileError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMalformed;
  } catch (const ws::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kMalformed;
  } catch (const ws::GridError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kGrid;
  } catch (const ws::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const ws::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
