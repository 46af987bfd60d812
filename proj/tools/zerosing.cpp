// zerosing command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "zerosing/corpus.hpp"
#include "zerosing/error.hpp"
#include "zerosing/metrics.hpp"
#include "zerosing/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void print_header(std::uint64_t hash, std::uint64_t seed) {
  std::cout << "config_hash " << hex64(hash) << "\nseed " << seed << "\n";
}

// Hash of the canonical options dump, for commands without a checkpoint.
std::uint64_t options_hash(const json& j) { return zs::fnv1a64(j.dump()); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw zs::Error("io-error", "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw zs::Error("parse-error", p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw zs::Error("io-error", "cannot write " + p.string());
  out << j.dump(2) << "\n";
}

void print_checkpoint_header(const zs::Checkpoint& ck, std::uint64_t seed) {
  print_header(ck.config_hash(), seed);
  std::cout << "variant " << zs::to_string(ck.train.variant) << "\nparameters "
            << ck.params.values.size() << "\n";
}

// ---------------------------------------------------------------- commands

struct GenCorpusArgs {
  std::string out;
  std::string config;
  int speakers = 2;
  int utterances = 10;
  double singing_fraction = 0.5;
  std::uint64_t seed = 0;
};

int run_gen_corpus(const GenCorpusArgs& a) {
  zs::SyntheticCorpusSpec spec;
  if (!a.config.empty()) spec = zs::SyntheticCorpusSpec::from_json(read_json(a.config));
  else {
    spec.n_speakers = a.speakers;
    spec.n_utterances = a.utterances;
    spec.singing_fraction = a.singing_fraction;
    spec.seed = a.seed;
  }
  spec.validate();
  spec.speakers = zs::expand_speakers(spec);
  const json spec_json = spec.to_json();
  print_header(options_hash(spec_json), spec.seed);
  const zs::Corpus corpus = zs::generate_corpus(spec);
  zs::write_corpus(corpus, a.out, {{"spec", spec_json}});
  std::cout << "items " << corpus.items.size() << "\nmanifest "
            << (fs::path(a.out) / "manifest.json").string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus;
  std::string model;
  std::string mix;
  std::string config;
  std::string out;
  std::string resume;
  std::string log;
  std::optional<int> iterations;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  zs::ModelConfig model;
  zs::TrainConfig train;
  if (!a.config.empty()) {
    const json j = read_json(a.config);
    if (j.contains("model")) model = zs::ModelConfig::from_json(j["model"]);
    if (j.contains("train")) train = zs::TrainConfig::from_json(j["train"]);
  }
  train.variant = zs::variant_from_string(a.model);
  if (a.mix.empty()) train.mix = train.variant != zs::ModelVariant::SvcC;
  else train.mix = a.mix == "on";
  if (a.iterations) train.iterations = *a.iterations;
  if (a.seed) train.seed = *a.seed;
  train.validate();
  model.content = zs::content_source(train.variant);

  std::optional<zs::Checkpoint> resume;
  if (!a.resume.empty()) resume = zs::load_checkpoint(a.resume);

  const zs::Corpus corpus = zs::load_corpus(a.corpus);
  zs::Checkpoint probe;
  probe.model = model;
  probe.train = train;
  print_header(probe.config_hash(), train.seed);
  std::cout << "variant " << zs::to_string(train.variant) << "\nmix "
            << (train.mix ? "on" : "off") << "\nparameters "
            << zs::ParamLayout(model).total() << std::endl;

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw zs::Error("io-error", "cannot write " + a.log);
  }
  std::ostream& log = a.log.empty() ? std::cout : log_file;
  zs::TrainingCallbacks cb;
  cb.log = [&](const json& j) { log << j.dump() << std::endl; };
  cb.on_checkpoint = [&](const zs::Checkpoint& ck) { zs::save_checkpoint(a.out, ck); };
  const zs::Checkpoint ck = zs::train(train, model, corpus, cb, resume ? &*resume : nullptr);
  zs::save_checkpoint(a.out, ck);
  std::cout << "checkpoint " << a.out << "\nsteps " << ck.step << "\n";
  return 0;
}

struct InferArgs {
  std::string ckpt;
  std::string score;
  std::string source;
  std::string ref;
  std::string lyrics;
  std::string model;
  std::string style;
  std::string out;
  std::string report;
  int steps = 50;
  double eta = 0.0;
  std::uint64_t seed = 0;
  int griffin_lim_iters = 60;
  bool no_pitch_adjust = false;
  bool shift_source_octave = false;
};

zs::InferenceOptions inference_options(const InferArgs& a) {
  zs::InferenceOptions o;
  o.ddim_steps = a.steps;
  o.eta = a.eta;
  o.seed = a.seed;
  o.pitch_adjust = !a.no_pitch_adjust;
  o.shift_source_octave = a.shift_source_octave;
  o.griffin_lim_iters = a.griffin_lim_iters;
  return o;
}

int finish_inference(const InferArgs& a, const zs::InferenceResult& r) {
  zs::write_wav(a.out, r.audio);
  const json report = r.report.to_json();
  if (!a.report.empty()) write_json(a.report, report);
  std::cout << report.dump() << "\nwav " << a.out << "\n";
  return 0;
}

int run_synth(const InferArgs& a) {
  const zs::Checkpoint ck = zs::load_checkpoint(a.ckpt);
  print_checkpoint_header(ck, a.seed);
  const zs::MusicScore score = zs::load_score(a.score);
  const zs::StyleToken style =
      !a.style.empty() ? zs::StyleToken::parse(a.style) : score.style.value_or(zs::StyleToken{});
  const zs::AudioBuffer ref = zs::read_wav(a.ref);
  return finish_inference(a, zs::synthesize_svs(score, style, ref, ck, inference_options(a)));
}

int run_convert(const InferArgs& a) {
  const zs::Checkpoint ck = zs::load_checkpoint(a.ckpt);
  print_checkpoint_header(ck, a.seed);
  const zs::ModelVariant variant =
      a.model.empty() ? ck.train.variant : zs::variant_from_string(a.model);
  if (variant == zs::ModelVariant::Svs)
    throw zs::Error("invalid-argument", "convert needs --model svc-b or svc-c");
  if (variant != ck.train.variant)
    throw zs::Error("config-mismatch", std::string("checkpoint was trained as ") +
                                           zs::to_string(ck.train.variant));
  const zs::AudioBuffer source = zs::read_wav(a.source);
  const zs::AudioBuffer ref = zs::read_wav(a.ref);
  std::optional<zs::StyleToken> style;
  if (!a.style.empty()) style = zs::StyleToken::parse(a.style);
  const auto opts = inference_options(a);
  if (variant == zs::ModelVariant::SvcB) {
    if (a.lyrics.empty()) throw zs::Error("missing-argument", "svc-b needs --lyrics");
    const zs::AlignedLyrics lyrics = zs::load_alignment(a.lyrics);
    return finish_inference(
        a, zs::convert_svc_b(source, lyrics, style.value_or(zs::StyleToken{}), ref, ck, opts));
  }
  return finish_inference(a, zs::convert_svc_c(source, style, ref, ck, opts));
}

struct ExtractArgs {
  std::string in;
  std::string mode = "singing";
  std::string out;
  std::string timbre;
  bool f0 = false;
  bool amp = false;
};

int run_extract(const ExtractArgs& a) {
  const zs::DomainMode mode = zs::domain_from_string(a.mode);
  print_header(options_hash({{"mode", a.mode}, {"f0", a.f0}, {"amp", a.amp}}), 0);
  const zs::AudioBuffer audio = zs::read_wav(a.in);
  const bool want_f0 = a.f0 || !a.amp;
  const bool want_amp = a.amp || !a.f0;
  const zs::F0Curve f0 = zs::extract_f0(audio, mode);
  const zs::AmplitudeEnvelope amp = zs::extract_amplitude(audio, mode);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw zs::Error("io-error", "cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  out << "frame_index";
  if (want_f0) out << ",f0_hz,voiced";
  if (want_amp) out << ",rms";
  out << "\n" << std::setprecision(9);
  for (std::size_t t = 0; t < f0.size(); ++t) {
    out << t;
    if (want_f0) out << "," << f0.values_hz[t] << "," << (f0.voiced[t] ? 1 : 0);
    if (want_amp) out << "," << amp.values[t];
    out << "\n";
  }
  if (!a.timbre.empty()) {
    const auto e = zs::timbre_embed(audio);
    zs::write_embedding_dump(a.timbre, {std::vector<float>(e.vector.begin(), e.vector.end())});
  }
  if (!a.out.empty())
    std::cout << "frames " << f0.size() << "\nvoiced " << f0.voiced_count() << "\n";
  return 0;
}

struct EvalArgs {
  std::string ref;
  std::string hyp;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  print_header(options_hash({{"metrics", 1}}), 0);
  const zs::MetricsReport r = zs::evaluate(zs::read_wav(a.ref), zs::read_wav(a.hyp));
  const json j = r.to_json();
  if (!a.out.empty()) write_json(a.out, j);
  std::cout << j.dump() << "\n";
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::string content = "lyrics";
  int draws = 1;
};

int run_gradcheck(const GradcheckArgs& a) {
  const zs::ContentSource content =
      a.content == "local" ? zs::ContentSource::LocalAudio : zs::ContentSource::Lyrics;
  const zs::ModelConfig config = zs::ModelConfig::small(content);
  print_header(config.hash(), a.seed);
  std::cout << "parameters " << zs::ParamLayout(config).total() << "\n";
  double worst = 0.0;
  for (int d = 0; d < a.draws; ++d) {
    const auto report = zs::gradient_check(config, zs::derive_seed(a.seed, "gradcheck", d));
    for (const auto& b : report.blocks)
      std::cout << "  " << b.block << " " << b.max_relative_error << "\n";
    worst = std::max(worst, report.max_relative_error);
  }
  const bool pass = worst < 1e-4;
  std::cout << "max relative error " << worst << "\n" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot singing voice synthesis and conversion"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Render a synthetic multi-speaker corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--config", gen.config, "Corpus spec JSON (overrides other flags)");
  gen_cmd->add_option("--speakers", gen.speakers, "Number of speakers");
  gen_cmd->add_option("--utterances", gen.utterances, "Utterances per speaker");
  gen_cmd->add_option("--singing-fraction", gen.singing_fraction, "Share of sung utterances");
  gen_cmd->add_option("--seed", gen.seed, "Seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a diffusion acoustic model");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus manifest.json")->required();
  train_cmd->add_option("--model", tr.model, "Variant")
      ->required()
      ->check(CLI::IsMember({"svs", "svc-b", "svc-c"}));
  train_cmd->add_option("--mix", tr.mix, "Mixed singing/speech training (default on, off for svc-c)")
      ->check(CLI::IsMember({"on", "off"}));
  train_cmd->add_option("--config", tr.config, "JSON with optional \"model\" and \"train\" objects");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint");
  train_cmd->add_option("--log", tr.log, "JSON-lines training log (default stdout)");
  train_cmd->add_option("--iterations", tr.iterations, "Total optimizer steps");
  train_cmd->add_option("--seed", tr.seed, "Seed");

  InferArgs syn;
  auto* synth_cmd = app.add_subcommand("synth", "Sing a score in the voice of a speech reference");
  synth_cmd->add_option("--ckpt", syn.ckpt, "svs checkpoint")->required();
  synth_cmd->add_option("--score", syn.score, "Score file")->required();
  synth_cmd->add_option("--ref", syn.ref, "Reference voice WAV")->required();
  synth_cmd->add_option("--style", syn.style, "genre:technique, e.g. pop:vibrato");
  synth_cmd->add_option("--steps", syn.steps, "DDIM steps");
  synth_cmd->add_option("--eta", syn.eta, "DDIM eta");
  synth_cmd->add_option("--seed", syn.seed, "Seed");
  synth_cmd->add_option("--griffin-lim-iters", syn.griffin_lim_iters, "Phase iterations");
  synth_cmd->add_flag("--no-pitch-adjust", syn.no_pitch_adjust, "Keep the score's register");
  synth_cmd->add_option("--out", syn.out, "Output WAV")->required();
  synth_cmd->add_option("--report", syn.report, "Write the inference report JSON");

  InferArgs conv;
  auto* convert_cmd = app.add_subcommand("convert", "Convert a sung recording to a reference voice");
  convert_cmd->add_option("--ckpt", conv.ckpt, "svc-b or svc-c checkpoint")->required();
  convert_cmd->add_option("--source", conv.source, "Source singing WAV")->required();
  convert_cmd->add_option("--ref", conv.ref, "Reference voice WAV")->required();
  convert_cmd->add_option("--lyrics", conv.lyrics, "Aligned lyrics (svc-b)");
  convert_cmd->add_option("--model", conv.model, "Expected variant")
      ->check(CLI::IsMember({"svc-b", "svc-c"}));
  convert_cmd->add_option("--style", conv.style, "genre:technique");
  convert_cmd->add_option("--steps", conv.steps, "DDIM steps");
  convert_cmd->add_option("--eta", conv.eta, "DDIM eta");
  convert_cmd->add_option("--seed", conv.seed, "Seed");
  convert_cmd->add_option("--griffin-lim-iters", conv.griffin_lim_iters, "Phase iterations");
  convert_cmd->add_flag("--shift-source-octave", conv.shift_source_octave,
                        "Move the source F0 by octaves toward the reference");
  convert_cmd->add_option("--out", conv.out, "Output WAV")->required();
  convert_cmd->add_option("--report", conv.report, "Write the inference report JSON");

  ExtractArgs ex;
  auto* extract_cmd = app.add_subcommand("extract", "F0 and amplitude curves as CSV");
  extract_cmd->add_option("--in", ex.in, "Input WAV")->required();
  extract_cmd->add_option("--mode", ex.mode, "Tracker mode")
      ->check(CLI::IsMember({"singing", "speech"}));
  extract_cmd->add_flag("--f0", ex.f0, "Emit F0 columns");
  extract_cmd->add_flag("--amp", ex.amp, "Emit amplitude column");
  extract_cmd->add_option("--out", ex.out, "CSV path (default stdout)");
  extract_cmd->add_option("--timbre", ex.timbre, "Also dump the timbre embedding here");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Objective metrics of a hypothesis against a reference");
  eval_cmd->add_option("--ref", ev.ref, "Reference WAV")->required();
  eval_cmd->add_option("--hyp", ev.hyp, "Hypothesis WAV")->required();
  eval_cmd->add_option("--out", ev.out, "Write the metrics JSON");

  GradcheckArgs gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
  grad_cmd->add_option("--seed", gc.seed, "Seed");
  grad_cmd->add_option("--content", gc.content, "Content conditioning")
      ->check(CLI::IsMember({"lyrics", "local"}));
  grad_cmd->add_option("--draws", gc.draws, "Random draws")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::RequiredError& e) {
    std::cerr << "error: missing-argument: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ExtrasError& e) {
    std::cerr << app.help() << "error: unknown-argument: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "error: invalid-argument: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_cmd) return run_gen_corpus(gen);
    if (*train_cmd) return run_train(tr);
    if (*synth_cmd) return run_synth(syn);
    if (*convert_cmd) return run_convert(conv);
    if (*extract_cmd) return run_extract(ex);
    if (*eval_cmd) return run_eval(ev);
    if (*grad_cmd) return run_gradcheck(gc);
  } catch (const zs::Error& e) {
    std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
    return e.category() == "missing-argument" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
