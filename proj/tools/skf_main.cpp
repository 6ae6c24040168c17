// skf — train, run and evaluate the skip-filtering voice separator.
//
// Subcommands: train, separate, evaluate, gradcheck, synth, params.
// Options resolve as: defaults < --config file < SKF_SEED env < explicit flags.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skf/audio.hpp"
#include "skf/autodiff.hpp"
#include "skf/config.hpp"
#include "skf/evalmetrics.hpp"
#include "skf/fixture.hpp"
#include "skf/layers.hpp"
#include "skf/separation.hpp"
#include "skf/stft.hpp"
#include "skf/training.hpp"

namespace fs = std::filesystem;

namespace {

// Optional command-line overrides for TrainConfig keys; unset flags leave the
// config (file or default) value in place.
struct ConfigFlags {
  std::optional<std::size_t> n_fft, hop, t_frames, l_context, n_bins, batch_size, patience,
      max_epochs;
  std::optional<std::uint32_t> sample_rate;
  std::optional<double> learning_rate, clip_norm, lambda_l2, alpha;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--n-fft", n_fft, "analysis window length in samples");
    app->add_option("--hop", hop, "analysis hop in samples");
    app->add_option("--sample-rate", sample_rate, "expected sample rate in Hz");
    app->add_option("--t-frames", t_frames, "frames per segment (T)");
    app->add_option("--l-context", l_context, "context frames per side (L)");
    app->add_option("--n-bins", n_bins, "frequency bins (0 = derive from n_fft)");
    app->add_option("--batch-size", batch_size, "segments per training batch");
    app->add_option("--patience", patience, "non-improving epochs before stopping");
    app->add_option("--max-epochs", max_epochs, "epoch cap");
    app->add_option("--learning-rate", learning_rate, "adam learning rate");
    app->add_option("--clip-norm", clip_norm, "global gradient norm clip");
    app->add_option("--lambda-l2", lambda_l2, "L2 penalty weight on the enhanced output");
    app->add_option("--alpha", alpha, "mask exponent in (0,2]");
    app->add_option("--seed", seed, "RNG seed");
  }

  void apply(skf::TrainConfig& cfg) const {
    if (n_fft) cfg.n_fft = *n_fft;
    if (hop) cfg.hop = *hop;
    if (sample_rate) cfg.sample_rate = *sample_rate;
    if (t_frames) cfg.t_frames = *t_frames;
    if (l_context) cfg.l_context = *l_context;
    if (n_bins) cfg.n_bins = *n_bins;
    if (batch_size) cfg.batch_size = *batch_size;
    if (patience) cfg.patience = *patience;
    if (max_epochs) cfg.max_epochs = *max_epochs;
    if (learning_rate) cfg.learning_rate = *learning_rate;
    if (clip_norm) cfg.clip_norm = *clip_norm;
    if (lambda_l2) cfg.lambda_l2 = *lambda_l2;
    if (alpha) cfg.alpha = *alpha;
    if (seed) cfg.seed = *seed;
  }
};

skf::TrainConfig resolve_config(const std::string& config_path, const ConfigFlags& flags) {
  skf::TrainConfig cfg;
  if (!config_path.empty()) cfg = skf::load_config_file(config_path);
  skf::apply_env_overrides(cfg);
  flags.apply(cfg);
  return cfg;
}

// One (mixture, target) WAV pair.
struct TrackPair {
  fs::path mixture;
  fs::path target;
};

std::vector<TrackPair> discover_tracks(const fs::path& root) {
  std::vector<TrackPair> tracks;
  auto pair_of = [](const fs::path& dir) -> std::optional<TrackPair> {
    const fs::path mix = dir / "mixture.wav";
    const fs::path tgt = dir / "target.wav";
    if (fs::exists(mix) && fs::exists(tgt)) return TrackPair{mix, tgt};
    return std::nullopt;
  };
  if (auto p = pair_of(root)) tracks.push_back(*p);
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& d : subdirs)
    if (auto p = pair_of(d)) tracks.push_back(*p);
  if (tracks.empty())
    throw std::runtime_error("no (mixture.wav, target.wav) pairs under " + root.string());
  return tracks;
}

int cmd_train(const skf::TrainConfig& cfg, const std::string& data_dir,
              const std::string& out_path) {
  cfg.validate();
  std::vector<skf::SegmentSample> dataset;
  for (const TrackPair& track : discover_tracks(data_dir)) {
    skf::AudioBuffer mix = skf::wav_read_mono(track.mixture.string());
    skf::AudioBuffer tgt = skf::wav_read_mono(track.target.string());
    const std::size_t len = std::min(mix.samples.size(), tgt.samples.size());
    mix.samples.resize(len);
    tgt.samples.resize(len);
    skf::AudioBuffer acc = mix;
    for (std::size_t i = 0; i < len; ++i) acc.samples[i] = mix.samples[i] - tgt.samples[i];

    const skf::MagnitudeSpectrogram mix_mag =
        skf::magnitude(skf::analyze(mix, cfg.n_fft, cfg.hop));
    const skf::MagnitudeSpectrogram tgt_mag =
        skf::magnitude(skf::analyze(tgt, cfg.n_fft, cfg.hop));
    const skf::MagnitudeSpectrogram acc_mag =
        skf::magnitude(skf::analyze(acc, cfg.n_fft, cfg.hop));
    // Ground truth: generalized Wiener filter over the known sources, alpha=1.
    const skf::Tensor truth =
        skf::wiener_target({tgt_mag.values, acc_mag.values}, mix_mag.values, 0, 1.0);
    std::vector<skf::SegmentSample> part =
        skf::build_dataset(mix_mag.values, truth, cfg.t_frames, cfg.l_context);
    std::cout << "track " << track.mixture.parent_path().filename().string() << ": "
              << part.size() << " segments\n";
    for (auto& s : part) dataset.push_back(std::move(s));
  }
  std::cout << "training on " << dataset.size() << " segments\n";
  const skf::TrainResult result = skf::train(cfg, dataset);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
    std::printf("epoch %3zu  loss %.6f\n", e + 1, result.epoch_losses[e]);
  std::printf("best epoch %zu  loss %.6f  (ran %zu epochs)\n", result.best_epoch,
              result.best_loss, result.epochs_run);
  skf::Checkpoint ck;
  ck.params = result.params;
  ck.config = cfg;
  ck.epoch = static_cast<std::uint32_t>(result.best_epoch);
  ck.best_loss = result.best_loss;
  skf::save_checkpoint(out_path, ck);
  std::cout << "checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_separate(const std::string& strategy_name, std::optional<double> alpha,
                 const std::string& model_path, const std::string& model2_path,
                 const std::string& input_path, const std::string& output_path) {
  skf::Strategy strategy;
  if (strategy_name == "s") strategy.kind = skf::StrategyKind::gru_s;
  else if (strategy_name == "d") strategy.kind = skf::StrategyKind::gru_d;
  else if (strategy_name == "dwf") strategy.kind = skf::StrategyKind::gru_dwf;
  else throw std::runtime_error("unknown strategy: " + strategy_name + " (use s, d or dwf)");
  strategy.alpha = alpha ? *alpha : skf::default_alpha(strategy.kind);
  skf::check_alpha(strategy.alpha);

  if (strategy.kind != skf::StrategyKind::gru_s && model2_path.empty())
    throw std::runtime_error("strategy requires two checkpoints");
  const skf::Checkpoint ck1 = skf::load_checkpoint(model_path);
  strategy.model1 = &ck1;
  skf::Checkpoint ck2;
  if (!model2_path.empty()) {
    ck2 = skf::load_checkpoint(model2_path);
    strategy.model2 = &ck2;
  }
  const skf::AudioBuffer mix = skf::wav_read_mono(input_path);
  skf::MaskStats stats;
  const skf::AudioBuffer est = skf::separate(strategy, mix, &stats);
  skf::wav_write(output_path, est);
  std::printf("separated %zu samples; mask max %.4f mean %.4f\n", est.samples.size(), stats.max,
              stats.mean);
  return 0;
}

int cmd_evaluate(const std::string& estimate_path, const std::vector<std::string>& reference_paths,
                 std::size_t target_index, const std::string& mixture_path,
                 const std::string& name, const std::string& report_path) {
  if (reference_paths.empty()) throw std::runtime_error("evaluate: at least one --reference");
  skf::AudioBuffer estimate = skf::wav_read_mono(estimate_path);
  std::vector<skf::AudioBuffer> references;
  std::size_t len = estimate.samples.size();
  for (const auto& p : reference_paths) {
    references.push_back(skf::wav_read_mono(p));
    len = std::min(len, references.back().samples.size());
  }
  estimate.samples.resize(len);
  for (auto& r : references) r.samples.resize(len);

  const std::string track_name =
      name.empty() ? fs::path(estimate_path).stem().string() : name;
  skf::EvalReport report;
  {
    const skf::Decomposition d = skf::decompose(estimate, references, target_index);
    report.tracks.push_back({track_name, skf::sdr(d), skf::sir(d)});
  }
  if (!mixture_path.empty()) {
    skf::AudioBuffer mix = skf::wav_read_mono(mixture_path);
    mix.samples.resize(len);
    const skf::Decomposition d = skf::decompose(mix, references, target_index);
    report.tracks.push_back({track_name + "_mixture", skf::sdr(d), skf::sir(d)});
  }
  std::cout << skf::format_report(report);
  if (!report_path.empty()) {
    skf::write_report(report_path, report);
    std::cout << "report written to " << report_path << "\n";
  }
  return 0;
}

int cmd_gradcheck(std::size_t n, std::size_t t, std::size_t l, std::size_t batch,
                  std::uint64_t seed, double eps, double lambda, double threshold) {
  skf::ModelParams model = skf::make_model(n, t, l, seed);
  std::vector<skf::Tensor*> ptrs = skf::param_list(model);
  std::vector<skf::Tensor> theta;
  for (skf::Tensor* p : ptrs) theta.push_back(*p);

  // Random non-negative segments and targets.
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
  auto random_grid = [&rng](std::size_t rows, std::size_t cols) {
    skf::Tensor g(rows, cols);
    for (auto& v : g.data)
      v = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return g;
  };
  std::vector<skf::SegmentSample> data;
  for (std::size_t b = 0; b < batch; ++b) {
    skf::SegmentSample s;
    s.input = random_grid(t, n);
    s.input_rev = skf::reverse_rows(s.input);
    s.target = random_grid(t - 2 * l, n);
    data.push_back(std::move(s));
  }

  auto loss_fn = [&](const std::vector<skf::Tensor>& params,
                     std::vector<skf::Tensor>* grads) -> double {
    skf::ModelParams m = skf::make_model_shell(n, t, l);
    std::vector<skf::Tensor*> slots = skf::param_list(m);
    for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = params[i];
    skf::Graph g;
    skf::ModelVars mv = skf::insert_params(g, m);
    skf::Var total{};
    for (std::size_t b = 0; b < data.size(); ++b) {
      skf::Var seg = g.constant(data[b].input);
      skf::Var seg_rev = g.constant(data[b].input_rev);
      skf::ForwardVars f = skf::model_forward(g, mv, seg, seg_rev, t, l, n);
      skf::Var li = skf::joint_loss_tape(g, data[b].target, f, lambda);
      total = b == 0 ? li : g.add(total, li);
    }
    skf::Var loss = g.scale(total, 1.0 / static_cast<double>(data.size()));
    const double value = g.value(loss).data[0];
    if (grads != nullptr) {
      g.backward(loss);
      grads->clear();
      for (skf::Var v : skf::var_list(mv)) grads->push_back(g.grad(v));
    }
    return value;
  };

  const double max_rel = skf::grad_check(loss_fn, theta, eps);
  std::printf("max_rel_error=%.6e\n", max_rel);
  if (max_rel < threshold) {
    std::printf("gradcheck OK (threshold %.1e)\n", threshold);
    return 0;
  }
  std::printf("gradcheck FAILED (threshold %.1e)\n", threshold);
  return 1;
}

int cmd_synth(const skf::FixtureSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const skf::FixtureSet fx = skf::synth_fixture(spec);
  skf::wav_write((fs::path(out_dir) / "mixture.wav").string(), fx.mixture);
  skf::wav_write((fs::path(out_dir) / "voice.wav").string(), fx.voice);
  skf::wav_write((fs::path(out_dir) / "accompaniment.wav").string(), fx.accompaniment);
  // target.wav aliases the voice so the directory is directly trainable.
  skf::wav_write((fs::path(out_dir) / "target.wav").string(), fx.voice);
  std::cout << "fixture written to " << out_dir << " (" << fx.mixture.samples.size()
            << " samples at " << spec.sample_rate << " Hz)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skip-filtering recurrent singing-voice separation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file")->expected(1);
  ConfigFlags flags;

  // train
  CLI::App* train = app.add_subcommand("train", "train a model on (mixture, target) WAV pairs");
  std::string train_data, train_out = "model.skf";
  train->add_option("--data", train_data, "directory with mixture.wav/target.wav pairs")
      ->required();
  train->add_option("--out", train_out, "checkpoint output path");
  flags.attach(train);

  // separate
  CLI::App* separate = app.add_subcommand("separate", "separate the target source from a mixture");
  std::string sep_strategy = "s", sep_model, sep_model2, sep_in, sep_out = "estimate.wav";
  std::optional<double> sep_alpha;
  separate->add_option("--strategy", sep_strategy, "s, d or dwf");
  separate->add_option("--alpha", sep_alpha, "mask exponent in (0,2]; defaults per strategy");
  separate->add_option("--model", sep_model, "checkpoint for the target source")->required();
  separate->add_option("--model2", sep_model2, "checkpoint for the complement source");
  separate->add_option("--input", sep_in, "mixture WAV")->required();
  separate->add_option("--output", sep_out, "estimate WAV output path");

  // evaluate
  CLI::App* evaluate = app.add_subcommand("evaluate", "SDR/SIR of an estimate against references");
  std::string eval_estimate, eval_mixture, eval_name, eval_report;
  std::vector<std::string> eval_refs;
  std::size_t eval_target = 0;
  evaluate->add_option("--estimate", eval_estimate, "estimated source WAV")->required();
  evaluate->add_option("--reference", eval_refs, "true source WAVs (repeatable)")->required();
  evaluate->add_option("--target-index", eval_target, "0-based index of the target reference");
  evaluate->add_option("--mixture", eval_mixture, "also score the unprocessed mixture");
  evaluate->add_option("--name", eval_name, "track name in the report");
  evaluate->add_option("--report", eval_report, "key-value report output path");

  // gradcheck
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the gradients");
  std::size_t gc_n = 8, gc_t = 6, gc_l = 1, gc_batch = 2;
  std::uint64_t gc_seed = 1234;
  double gc_eps = 1e-4, gc_threshold = 1e-4;
  gradcheck->add_option("--n", gc_n, "bins");
  gradcheck->add_option("--t", gc_t, "frames per segment");
  gradcheck->add_option("--l", gc_l, "context frames per side");
  gradcheck->add_option("--batch", gc_batch, "segments in the batch");
  gradcheck->add_option("--seed", gc_seed, "RNG seed");
  gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  gradcheck->add_option("--threshold", gc_threshold, "pass threshold");

  // synth
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic voice/accompaniment fixture");
  skf::FixtureSpec fx_spec;
  std::string synth_out = "fixture";
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--duration", fx_spec.duration_s, "seconds");
  synth->add_option("--sample-rate", fx_spec.sample_rate, "Hz");
  synth->add_option("--seed", fx_spec.seed, "RNG seed");
  synth->add_option("--f0", fx_spec.fundamental_hz, "voice fundamental in Hz");
  synth->add_option("--partials", fx_spec.partials, "voice partial count");
  synth->add_option("--vibrato-depth", fx_spec.vibrato_depth, "relative vibrato depth");
  synth->add_option("--vibrato-rate", fx_spec.vibrato_rate_hz, "vibrato rate in Hz");

  // params
  CLI::App* params = app.add_subcommand("params", "print the trainable parameter count");
  std::size_t params_n = 0;
  params->add_option("--n", params_n, "bins (0 = derive from n_fft)");
  flags.attach(params);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      skf::TrainConfig cfg = resolve_config(config_path, flags);
      return cmd_train(cfg, train_data, train_out);
    }
    if (separate->parsed())
      return cmd_separate(sep_strategy, sep_alpha, sep_model, sep_model2, sep_in, sep_out);
    if (evaluate->parsed())
      return cmd_evaluate(eval_estimate, eval_refs, eval_target, eval_mixture, eval_name,
                          eval_report);
    if (gradcheck->parsed()) {
      if (gradcheck->count("--seed") == 0)
        if (const char* s = std::getenv("SKF_SEED")) gc_seed = std::stoull(s);
      const skf::TrainConfig cfg = resolve_config(config_path, flags);
      return cmd_gradcheck(gc_n, gc_t, gc_l, gc_batch, gc_seed, gc_eps, cfg.lambda_l2,
                           gc_threshold);
    }
    if (synth->parsed()) {
      if (synth->count("--seed") == 0)
        if (const char* s = std::getenv("SKF_SEED")) fx_spec.seed = std::stoull(s);
      return cmd_synth(fx_spec, synth_out);
    }
    if (params->parsed()) {
      skf::TrainConfig cfg = resolve_config(config_path, flags);
      const std::size_t n = params_n ? params_n : cfg.bins();
      std::cout << skf::count_params(n) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
