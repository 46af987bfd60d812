// End-to-end acceptance checks, one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "zerosing/corpus.hpp"
#include "zerosing/error.hpp"
#include "zerosing/wav.hpp"

using namespace zs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s > budget_s) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(budget_s)) + " s budget";
  }
  failures += !o.pass;
  std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double cents(double a, double b) { return 1200.0 * std::log2(a / b); }

AudioBuffer sine(double hz, double seconds) {
  AudioBuffer a;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / kSampleRate);
  return a;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path work_dir() {
  const auto d = fs::temp_directory_path() / "zerosing_acceptance";
  fs::create_directories(d);
  return d;
}

// ---------------------------------------------------------------- 1

Outcome schedule_fidelity() {
  const NoiseSchedule s = make_schedule();
  bool ok = s.num_steps() == 1000 && s.beta(1) == 1e-4 && s.beta(1000) == 2e-2;
  for (int t = 2; t <= 1000; ++t) ok = ok && s.alpha_bar(t) < s.alpha_bar(t - 1);
  long double prod = 1.0L;
  for (int i = 0; i < 1000; ++i)
    prod *= 1.0L - (1e-4L + (2e-2L - 1e-4L) * static_cast<long double>(i) / 999.0L);
  const double rel = std::abs(static_cast<double>((s.alpha_bar(1000) - prod) / prod));
  ok = ok && rel < 1e-6;
  return {ok, "beta_1 " + fmt("%.6g", s.beta(1)) + ", beta_1000 " + fmt("%.6g", s.beta(1000)) +
                  ", alpha_bar_1000 rel err " + fmt("%.2e", rel)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_correctness() {
  double worst = 0.0;
  std::string worst_block;
  std::size_t blocks = 0;
  for (int d = 0; d < 20; ++d) {
    const auto content = d % 2 ? ContentSource::LocalAudio : ContentSource::Lyrics;
    const auto r = gradient_check(ModelConfig::small(content), derive_seed(2024, "accept-grad", d));
    blocks = std::max(blocks, r.blocks.size());
    for (const auto& b : r.blocks)
      if (b.max_relative_error > worst) {
        worst = b.max_relative_error;
        worst_block = b.block;
      }
  }
  return {worst < 1e-4, "20 draws, up to " + std::to_string(blocks) + " blocks, max rel err " +
                            fmt("%.2e", worst) + " (" + worst_block + ")"};
}

// ---------------------------------------------------------------- 3

Outcome forward_statistics() {
  const NoiseSchedule s = make_schedule();
  Rng rng(derive_seed(3, "accept-q"));
  const Eigen::Index rows = 80, cols = 4;
  const Mat<double> x0 = Mat<double>::Constant(rows, cols, 0.8);
  const double n = 1e4 * rows * cols;
  double worst = 0.0;
  std::string detail;
  for (int t : {1, 500, 1000}) {
    double sum = 0.0, sq = 0.0;
    for (int d = 0; d < 10000; ++d) {
      const Mat<double> x = q_sample<double>(x0, t, gaussian_like<double>(rows, cols, rng), s);
      sum += x.sum();
      sq += x.squaredNorm();
    }
    const double mean = sum / n, var = sq / n - mean * mean;
    const double mu = std::sqrt(s.alpha_bar(t)) * 0.8, sigma2 = 1.0 - s.alpha_bar(t);
    // Mean error is measured on the scale of the marginal, since mu -> 0 at t = 1000.
    const double mean_err = std::abs(mean - mu) / std::sqrt(mu * mu + sigma2);
    const double var_err = std::abs(var - sigma2) / sigma2;
    worst = std::max({worst, mean_err, var_err});
    detail += "t=" + std::to_string(t) + " mean " + fmt("%.2e", mean_err) + " var " +
              fmt("%.2e", var_err) + "; ";
  }
  return {worst < 0.02, detail + "max " + fmt("%.3f", worst)};
}

// ---------------------------------------------------------------- 4

Outcome pitch_tracker() {
  struct Case {
    double hz;
    DomainMode mode;
  };
  const std::vector<Case> cases{{110, DomainMode::Singing}, {220, DomainMode::Singing},
                                {440, DomainMode::Singing}, {880, DomainMode::Singing},
                                {110, DomainMode::Speech},  {220, DomainMode::Speech}};
  bool ok = true;
  double worst = 1.0;
  for (const auto& c : cases) {
    const AudioBuffer a = sine(c.hz, 2.0);
    const F0Curve f0 = extract_f0(a, c.mode);
    // Interior: the analysis window lies inside the signal.
    const std::size_t margin = 4;
    std::size_t good = 0, total = 0;
    for (std::size_t t = margin; t + margin < f0.size(); ++t) {
      ++total;
      good += f0.voiced[t] && std::abs(cents(f0.values_hz[t], c.hz)) < 10.0;
    }
    const double frac = static_cast<double>(good) / total;
    worst = std::min(worst, frac);
    ok = ok && frac >= 0.95;
  }
  AudioBuffer silence;
  silence.samples.assign(2 * kSampleRate, 0.0);
  const std::size_t voiced = extract_f0(silence, DomainMode::Singing).voiced_count() +
                             extract_f0(silence, DomainMode::Speech).voiced_count();
  ok = ok && voiced == 0;
  return {ok, "worst interior accuracy " + fmt("%.3f", worst) + ", silence voiced frames " +
                  std::to_string(voiced)};
}

// ---------------------------------------------------------------- 5

int brute_force_shift(double score_hz, double ref_hz) {
  int best = 0;
  double best_err = 1e300;
  for (int k = -4; k <= 4; ++k) {
    const double err = std::abs(std::log2(score_hz * std::exp2(k) / ref_hz));
    if (err < best_err - 1e-9 ||
        (std::abs(err - best_err) <= 1e-9 &&
         (std::abs(k) < std::abs(best) || (std::abs(k) == std::abs(best) && k < best)))) {
      best = k;
      best_err = err;
    }
  }
  return best;
}

Outcome pitch_adjustment_grid() {
  std::size_t cases = 0, agree = 0;
  double worst = 0.0;
  for (int ref = 110; ref <= 880; ++ref) {
    F0Curve curve;
    curve.values_hz.assign(20, static_cast<double>(ref));
    curve.voiced.assign(20, true);
    for (int m = 48; m <= 84; ++m) {
      MusicScore score;
      for (int i = 0; i < 3; ++i) {
        Note n;
        n.midi = m + (i - 1) * 2;
        n.onset_beats = Rational(i);
        n.duration_beats = Rational(1);
        score.notes.push_back(n);
      }
      const PitchAdjustment adj = pitch_adjust(score, curve);
      ++cases;
      agree += adj.shift_semitones == 12 * brute_force_shift(midi_to_hz(m), ref);
      worst = std::max(worst, std::abs(std::log2(score_median_hz(adj.score) / ref)));
    }
  }
  return {agree == cases && worst <= 0.5 + 1e-12,
          std::to_string(agree) + "/" + std::to_string(cases) +
              " match brute force, max post-shift distance " + fmt("%.4f", worst) + " oct"};
}

// ---------------------------------------------------------------- 6

Outcome sampler_ratio() {
  const MixedSampler sampler(10, 10, true);
  Rng rng(derive_seed(6, "accept-sampler"));
  int singing = 0;
  for (int i = 0; i < 10000; ++i) singing += sampler.next(rng).domain == DomainMode::Singing;
  const double frac = singing / 1e4;
  return {frac >= 0.49 && frac <= 0.51, "singing fraction " + fmt("%.4f", frac)};
}

// ---------------------------------------------------------------- 7

std::optional<Checkpoint> overfit_checkpoint;
Corpus overfit_corpus;

Outcome overfit_convergence() {
  SyntheticCorpusSpec spec;
  spec.n_speakers = 2;
  spec.n_utterances = 2;
  spec.min_notes = 4;
  spec.max_notes = 6;
  spec.seed = 11;
  overfit_corpus = generate_corpus(spec);
  TrainConfig tc;
  tc.iterations = 5000;
  tc.seed = 1;
  tc.log_every = 5000;
  overfit_checkpoint = train(tc, ModelConfig{}, overfit_corpus);
  const auto examples = prepare_examples(*overfit_checkpoint, overfit_corpus);
  const double eps = evaluate_eps_mse(*overfit_checkpoint, examples, 16, 5);
  double l1 = 0.0;
  for (const auto& e : examples)
    l1 += (reconstruct(*overfit_checkpoint, e.input, 50, 3) - e.x0).cwiseAbs().mean();
  l1 /= static_cast<double>(examples.size());
  return {eps < 0.05 && l1 < 0.15,
          "eps-MSE " + fmt("%.4f", eps) + " (< 0.05), DDIM-50 mel L1 " + fmt("%.4f", l1) +
              " (< 0.15), 4 utterances, 5000 steps"};
}

// ---------------------------------------------------------------- 8

std::optional<Checkpoint> svc_c_checkpoint;
std::vector<CorpusItem> conversion_sources;
std::vector<AudioBuffer> conversion_refs;

Outcome zero_shot_conversion() {
  SyntheticCorpusSpec spec;
  spec.seed = 21;
  spec.n_utterances = 30;
  const Corpus corpus = generate_corpus(spec);
  const auto seen = expand_speakers(spec);

  // Held-out voices, never trained on, tilted the other way from each seen voice.
  SyntheticCorpusSpec held_spec;
  held_spec.seed = 77;
  held_spec.tilt_range_db = 4.0;
  auto held = expand_speakers(held_spec);
  conversion_refs.clear();
  for (int i = 0; i < 2; ++i)
    conversion_refs.push_back(
        synth_speech_item(held[i], derive_seed(77, "reference", i), "ref", 14).audio);

  conversion_sources.clear();
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 5; ++k)
      conversion_sources.push_back(
          synth_singing_item(seen[s], spec, derive_seed(99, "source", s * 10 + k), "source"));

  std::string detail;
  bool ok = true;
  for (auto variant : {ModelVariant::SvcB, ModelVariant::SvcC}) {
    TrainConfig tc;
    tc.variant = variant;
    tc.mix = variant != ModelVariant::SvcC;
    tc.iterations = 10000;
    tc.seed = 1;
    tc.log_every = 10000;
    const Checkpoint ck = train(tc, ModelConfig{}, corpus);
    int closer = 0, pitch_kept = 0;
    const int n = static_cast<int>(conversion_sources.size());
    for (int i = 0; i < n; ++i) {
      const CorpusItem& src = conversion_sources[i];
      // seen[0] leans dark, seen[1] bright; the reference is the opposite held voice.
      const AudioBuffer& ref = conversion_refs[i < 5 ? 1 : 0];
      InferenceOptions o;
      o.seed = static_cast<std::uint64_t>(i);
      const InferenceResult r =
          variant == ModelVariant::SvcB
              ? convert_svc_b(src.audio, *src.lyrics, src.style, ref, ck, o)
              : convert_svc_c(src.audio, src.style, ref, ck, o);
      const auto out = timbre_embed(r.audio);
      closer += cosine_similarity(out.vector, timbre_embed(ref).vector) >
                cosine_similarity(out.vector, timbre_embed(src.audio).vector);
      const double dev =
          cents(f0_statistics(extract_f0(r.audio, DomainMode::Singing)).median_hz,
                f0_statistics(extract_f0(src.audio, DomainMode::Singing)).median_hz);
      pitch_kept += std::abs(dev) < 100.0;
    }
    ok = ok && closer >= 0.8 * n && pitch_kept >= 0.8 * n;
    detail += std::string(to_string(variant)) + " timbre closer to ref " + std::to_string(closer) +
              "/" + std::to_string(n) + ", F0 within 100 cents " + std::to_string(pitch_kept) +
              "/" + std::to_string(n) + "; ";
    if (variant == ModelVariant::SvcC) svc_c_checkpoint = ck;
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 9

Outcome determinism() {
  if (!overfit_checkpoint || !svc_c_checkpoint)
    return {false, "needs the checkpoints from criteria 7 and 8"};
  const fs::path dir = work_dir();
  // Training: a shortened rerun of criterion 7, twice.
  TrainConfig tc;
  tc.iterations = 200;
  tc.seed = 1;
  for (int i = 0; i < 2; ++i)
    save_checkpoint(dir / ("train" + std::to_string(i) + ".ckpt"),
                    train(tc, ModelConfig{}, overfit_corpus));
  const bool train_same = file_bytes(dir / "train0.ckpt") == file_bytes(dir / "train1.ckpt");

  InferenceOptions o;
  o.seed = 42;
  const CorpusItem& item = overfit_corpus.items[0];
  const AudioBuffer& speech = overfit_corpus.items[1].audio;
  for (int i = 0; i < 2; ++i) {
    write_wav(dir / ("synth" + std::to_string(i) + ".wav"),
              synthesize_svs(*item.score, item.style, speech, *overfit_checkpoint, o).audio);
    write_wav(dir / ("convert" + std::to_string(i) + ".wav"),
              convert_svc_c(conversion_sources[0].audio, std::nullopt, conversion_refs[1],
                            *svc_c_checkpoint, o)
                  .audio);
  }
  const bool synth_same = file_bytes(dir / "synth0.wav") == file_bytes(dir / "synth1.wav");
  const bool convert_same = file_bytes(dir / "convert0.wav") == file_bytes(dir / "convert1.wav");
  return {train_same && synth_same && convert_same,
          std::string("checkpoint bytes ") + (train_same ? "equal" : "differ") + ", synth WAV " +
              (synth_same ? "equal" : "differ") + ", convert WAV " +
              (convert_same ? "equal" : "differ")};
}

// ---------------------------------------------------------------- 10

Outcome svc_c_regime() {
  SyntheticCorpusSpec spec;
  spec.n_utterances = 2;
  spec.min_notes = 3;
  spec.max_notes = 4;
  spec.seed = 10;
  const Corpus corpus = generate_corpus(spec);
  TrainConfig tc;
  tc.variant = ModelVariant::SvcC;
  tc.iterations = 1;
  tc.batch_size = 1;
  tc.mix = true;
  std::string message;
  try {
    train(tc, ModelConfig{}, corpus);
  } catch (const Error& e) {
    message = std::string(e.category()) + ": " + e.what();
  }
  tc.mix = false;
  const Checkpoint ck = train(tc, ModelConfig{}, corpus);
  const bool ok = message == "invalid-config: svc-c trains on singing only" && ck.step == 1;
  return {ok, "mixed rejected with \"" + message + "\", singing-only ran " +
                  std::to_string(ck.step) + " step"};
}

}  // namespace

int main() {
  report(1, "schedule fidelity", 1, schedule_fidelity);
  report(2, "gradient correctness", 120, gradient_correctness);
  report(3, "forward-process statistics", 30, forward_statistics);
  report(4, "pitch tracker oracle", 30, pitch_tracker);
  report(5, "pitch adjustment", 5, pitch_adjustment_grid);
  report(6, "mixed sampler ratio", 5, sampler_ratio);
  report(7, "overfit convergence", 1800, overfit_convergence);
  report(8, "zero-shot conversion contract", 900, zero_shot_conversion);
  report(9, "determinism", 600, determinism);
  report(10, "svc-c data regime", 60, svc_c_regime);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
