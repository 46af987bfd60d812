#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zerosing/checkpoint.hpp"
#include "zerosing/diffusion.hpp"
#include "zerosing/embeddings.hpp"
#include "zerosing/features.hpp"
#include "zerosing/performance.hpp"
#include "zerosing/score.hpp"

namespace zs {

/// One training utterance. Singing items carry a score; speech items only a
/// lyric alignment. For inference the same record describes the request
/// (conversion source audio, or the score to synthesize).
struct CorpusItem {
  std::string id;
  AudioBuffer audio;
  DomainMode domain = DomainMode::Singing;
  std::optional<MusicScore> score;
  std::optional<AlignedLyrics> lyrics;
  std::string speaker;
  StyleToken style;
};

struct Corpus {
  std::vector<CorpusItem> items;

  std::vector<std::size_t> indices(DomainMode domain) const;
};

// ---------------------------------------------------------------- pitch

/// Median frequency of the pitched notes (per note, not duration weighted).
double score_median_hz(const MusicScore& score);

/// Integer k minimizing |log2(score_hz * 2^k / ref_hz)|; ties go to the
/// smaller |k|, then to the negative k.
int choose_octave_shift(double score_median_hz, double ref_median_hz);

struct PitchAdjustment {
  MusicScore score;
  int shift_semitones = 0;
};

/// Octave transposition toward the reference median F0. Throws
/// "no-voiced-reference", or "out-of-range" with a suggested manual shift.
PitchAdjustment pitch_adjust(const MusicScore& score, const F0Curve& ref_f0);

// ---------------------------------------------------------------- mixing

struct Draw {
  DomainMode domain;
  std::size_t index;  // within that domain's item list
};

/// Per item: singing with probability 1/2 (always singing when mixing is
/// off), then uniform within the domain.
class MixedSampler {
 public:
  MixedSampler(std::size_t n_singing, std::size_t n_speech, bool mix);
  Draw next(Rng& rng) const;

 private:
  std::size_t n_singing_, n_speech_;
  bool mix_;
};

// ---------------------------------------------------------------- conditioning

enum class ConditioningMode { TrainGT, InferSVS, InferSVC_B, InferSVC_C };

struct ConditioningBundle {
  F0Curve f0;
  AmplitudeEnvelope amplitude;
  ContentSource content = ContentSource::Lyrics;
  LyricFrames lyrics;           // Lyrics content
  RowMatrix local_content;      // LocalAudio content, T x 64
  TimbreEmbedding timbre;
  StyleToken style;
  std::optional<PerformanceTiming> timing;  // InferSVS only
  int frames = 0;
};

struct ConditioningOptions {
  ContentSource content = ContentSource::Lyrics;  // TrainGT only
  std::uint64_t seed = 0;                         // performance rules (InferSVS)
  const StyleProfileTable* styles = nullptr;      // defaults when null
};

/// TrainGT reads everything from the item; inference modes take timbre from
/// `reference` and performance/content from the item as the request.
/// Throws "missing-score", "missing-lyrics" or "invalid-argument" when the
/// mode needs something the item lacks.
ConditioningBundle build_conditioning(const CorpusItem& item, ConditioningMode mode,
                                      const AudioBuffer* reference = nullptr,
                                      const ConditioningOptions& options = {});

/// Network units: log2(F0/220) (0 when unvoiced), voiced flag, amplitude
/// divided by its utterance maximum; timbre scaled to unit RMS per element.
ModelInput<float> to_model_input(const ConditioningBundle& bundle);

/// Alignment clipped or extended (last phoneme) to exactly `frames`.
AlignedLyrics fit_alignment(AlignedLyrics lyrics, int frames);

// ---------------------------------------------------------------- training

struct TrainingCallbacks {
  /// {step, loss, lr, wall_ms}; loss is the mean since the previous entry.
  std::function<void(const nlohmann::json&)> log;
  std::function<void(const Checkpoint&)> on_checkpoint;
};

/// Adam on the eps-MSE with random crops. The model's content source is set
/// from the variant. Throws "divergence" on a non-finite loss.
/// With `resume`, continues its parameters, optimizer and RNG up to
/// config.iterations.
Checkpoint train(const TrainConfig& config, ModelConfig model, const Corpus& corpus,
                 const TrainingCallbacks& callbacks = {}, const Checkpoint* resume = nullptr);

/// Items the variant trains on, with normalized mels and GT conditioning.
std::vector<TrainExample<float>> prepare_examples(const Checkpoint& ckpt, const Corpus& corpus);

/// Mean eps-MSE over whole utterances, `draws` noise draws per example.
double evaluate_eps_mse(const Checkpoint& ckpt, const std::vector<TrainExample<float>>& examples,
                        int draws, std::uint64_t seed);

/// DDIM sample from GT conditioning.
Mat<float> reconstruct(const Checkpoint& ckpt, const ModelInput<float>& input, int steps,
                       std::uint64_t seed);

// ---------------------------------------------------------------- inference

struct InferenceOptions {
  int ddim_steps = 50;
  double eta = 0.0;
  std::uint64_t seed = 0;
  bool pitch_adjust = true;          // SVS
  bool shift_source_octave = false;  // SVC: octave-shift extracted F0 toward the reference
  int griffin_lim_iters = 60;
};

struct InferenceReport {
  int shift_semitones = 0;
  int frames = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

struct InferenceResult {
  AudioBuffer audio;
  MelSpectrogram mel;
  InferenceReport report;
};

/// Lyrics come from the score's note lyrics.
InferenceResult synthesize_svs(const MusicScore& score, const StyleToken& style,
                               const AudioBuffer& reference, const Checkpoint& ckpt,
                               const InferenceOptions& options = {});

InferenceResult convert_svc_b(const AudioBuffer& source, const AlignedLyrics& lyrics,
                              const StyleToken& style, const AudioBuffer& reference,
                              const Checkpoint& ckpt, const InferenceOptions& options = {});

/// Style defaults to (Pop, Normal).
InferenceResult convert_svc_c(const AudioBuffer& source, std::optional<StyleToken> style,
                              const AudioBuffer& reference, const Checkpoint& ckpt,
                              const InferenceOptions& options = {});

}  // namespace zs
