// Run configuration: DSP constants, model dimensions and optimizer
// hyperparameters, serialized as a flat key=value text block. The same block
// is embedded in checkpoints so a saved model carries everything needed to
// rebuild its pipeline.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace skf {

struct TrainConfig {
  // DSP
  std::size_t n_fft = 2048;
  std::size_t hop = 256;
  std::uint32_t sample_rate = 44100;
  // Model dimensions; n_bins = 0 derives N from n_fft, hidden = 0 ties the
  // GRU width to N (the residual connections require hidden == N).
  std::size_t t_frames = 18;  // T
  std::size_t l_context = 3;  // L
  std::size_t n_bins = 0;
  std::size_t hidden = 0;
  // Optimization
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  double clip_norm = 0.35;
  double lambda_l2 = 1e-4;
  std::size_t patience = 2;
  std::size_t max_epochs = 300;
  std::uint64_t seed = 1234;
  // Separation
  double alpha = 1.7;

  std::size_t bins() const { return n_bins ? n_bins : n_fft / 2 + 1; }
  std::size_t hidden_dim() const { return hidden ? hidden : bins(); }

  void validate() const {
    if (n_fft < 1 || hop < 1 || hop > n_fft) throw std::runtime_error("config: bad n_fft/hop");
    if (sample_rate == 0) throw std::runtime_error("config: bad sample_rate");
    if (t_frames <= 2 * l_context) throw std::runtime_error("context exceeds segment");
    if (learning_rate < 0.0 || clip_norm <= 0.0 || lambda_l2 < 0.0)
      throw std::runtime_error("config: bad optimizer values");
    if (batch_size < 1 || patience < 1 || max_epochs < 1)
      throw std::runtime_error("config: bad loop bounds");
    if (hidden_dim() != bins()) throw std::runtime_error("config: hidden must equal n_bins");
    if (alpha <= 0.0 || alpha > 2.0) throw std::runtime_error("config: alpha out of (0,2]");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void config_set(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto as_u = [&value]() { return static_cast<std::size_t>(std::stoull(value)); };
  auto as_d = [&value]() { return std::stod(value); };
  if (key == "n_fft") cfg.n_fft = as_u();
  else if (key == "hop") cfg.hop = as_u();
  else if (key == "sample_rate") cfg.sample_rate = static_cast<std::uint32_t>(std::stoull(value));
  else if (key == "t_frames") cfg.t_frames = as_u();
  else if (key == "l_context") cfg.l_context = as_u();
  else if (key == "n_bins") cfg.n_bins = as_u();
  else if (key == "hidden") cfg.hidden = as_u();
  else if (key == "learning_rate") cfg.learning_rate = as_d();
  else if (key == "batch_size") cfg.batch_size = as_u();
  else if (key == "clip_norm") cfg.clip_norm = as_d();
  else if (key == "lambda_l2") cfg.lambda_l2 = as_d();
  else if (key == "patience") cfg.patience = as_u();
  else if (key == "max_epochs") cfg.max_epochs = as_u();
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "alpha") cfg.alpha = as_d();
  else throw std::runtime_error("unknown config key: " + key);
}

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
inline TrainConfig parse_config_text(const std::string& text, TrainConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config: expected key=value: " + line);
    config_set(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline TrainConfig load_config_file(const std::string& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

inline std::string config_to_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "n_fft=" << c.n_fft << "\n"
      << "hop=" << c.hop << "\n"
      << "sample_rate=" << c.sample_rate << "\n"
      << "t_frames=" << c.t_frames << "\n"
      << "l_context=" << c.l_context << "\n"
      << "n_bins=" << c.n_bins << "\n"
      << "hidden=" << c.hidden << "\n"
      << "learning_rate=" << detail::fmt_double(c.learning_rate) << "\n"
      << "batch_size=" << c.batch_size << "\n"
      << "clip_norm=" << detail::fmt_double(c.clip_norm) << "\n"
      << "lambda_l2=" << detail::fmt_double(c.lambda_l2) << "\n"
      << "patience=" << c.patience << "\n"
      << "max_epochs=" << c.max_epochs << "\n"
      << "seed=" << c.seed << "\n"
      << "alpha=" << detail::fmt_double(c.alpha) << "\n";
  return out.str();
}

/// SKF_SEED in the environment overrides the configured seed (explicit
/// command-line flags still win; the CLI applies them afterwards).
inline void apply_env_overrides(TrainConfig& cfg) {
  if (const char* s = std::getenv("SKF_SEED")) cfg.seed = std::stoull(s);
}

}  // namespace skf
