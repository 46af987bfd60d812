#include "zerosing/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "zerosing/diffusion.hpp"
#include "zerosing/error.hpp"

namespace zs {

std::vector<std::size_t> Corpus::indices(DomainMode domain) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].domain == domain) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- pitch

double score_median_hz(const MusicScore& score) {
  std::vector<double> hz;
  for (const auto& n : score.notes)
    if (!n.is_rest()) hz.push_back(midi_to_hz(*n.midi));
  if (hz.empty()) throw Error("invalid-argument", "score has no pitched notes");
  return percentile(std::move(hz), 50.0);
}

int choose_octave_shift(double score_median_hz, double ref_median_hz) {
  if (!(score_median_hz > 0.0) || !(ref_median_hz > 0.0))
    throw Error("invalid-argument", "octave shift needs positive frequencies");
  const double d = std::log2(ref_median_hz / score_median_hz);
  const int lo = static_cast<int>(std::floor(d));
  const int hi = lo + 1;
  const double e_lo = std::abs(lo - d), e_hi = std::abs(hi - d);
  constexpr double kTie = 1e-9;
  if (e_lo < e_hi - kTie) return lo;
  if (e_hi < e_lo - kTie) return hi;
  if (std::abs(lo) != std::abs(hi)) return std::abs(lo) < std::abs(hi) ? lo : hi;
  return lo;
}

PitchAdjustment pitch_adjust(const MusicScore& score, const F0Curve& ref_f0) {
  const double ref_hz = f0_statistics(ref_f0).median_hz;
  const int k = choose_octave_shift(score_median_hz(score), ref_hz);
  if (k == 0) return {score, 0};
  int lowest = kMaxMidi, highest = kMinMidi;
  for (const auto& n : score.notes) {
    if (n.is_rest()) continue;
    lowest = std::min(lowest, *n.midi);
    highest = std::max(highest, *n.midi);
  }
  const int min_shift = kMinMidi - lowest, max_shift = kMaxMidi - highest;
  if (12 * k < min_shift || 12 * k > max_shift) {
    int suggestion = 12 * k;
    while (suggestion > max_shift) suggestion -= 12;
    while (suggestion < min_shift) suggestion += 12;
    std::string hint = suggestion >= min_shift && suggestion <= max_shift
                           ? "; try a manual shift of " + std::to_string(suggestion) + " semitones"
                           : "";
    throw Error("out-of-range", "pitch adjustment by " + std::to_string(12 * k) +
                                    " semitones leaves the MIDI range 21..108" + hint);
  }
  return {transpose(score, 12 * k), 12 * k};
}

// ---------------------------------------------------------------- mixing

MixedSampler::MixedSampler(std::size_t n_singing, std::size_t n_speech, bool mix)
    : n_singing_(n_singing), n_speech_(n_speech), mix_(mix) {
  if (n_singing_ == 0) throw Error("empty-corpus", "no singing items");
  if (mix_ && n_speech_ == 0) throw Error("empty-corpus", "mixed training needs speech items");
}

Draw MixedSampler::next(Rng& rng) const {
  const bool singing = !mix_ || uniform01(rng) < 0.5;
  const std::size_t n = singing ? n_singing_ : n_speech_;
  const std::size_t index = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  return {singing ? DomainMode::Singing : DomainMode::Speech, index};
}

// ---------------------------------------------------------------- conditioning

AlignedLyrics fit_alignment(AlignedLyrics lyrics, int frames) {
  auto& ph = lyrics.phonemes;
  while (!ph.empty() && ph.back().start_frame >= frames) ph.pop_back();
  if (ph.empty()) throw Error("missing-lyrics", "alignment covers no frames");
  ph.back().end_frame = frames;
  return lyrics;
}

namespace {

void require_reference(const AudioBuffer* reference) {
  if (!reference) throw Error("invalid-argument", "inference needs a voice reference");
}

void check_lengths(const ConditioningBundle& b) {
  const auto T = static_cast<std::size_t>(b.frames);
  bool ok = b.f0.size() == T && b.amplitude.size() == T;
  if (b.content == ContentSource::Lyrics) ok = ok && b.lyrics.phone_ids.size() == T;
  else ok = ok && b.local_content.rows() == b.frames;
  if (!ok) throw Error("shape-mismatch", "conditioning sequences differ in length");
}

void set_content(ConditioningBundle& b, const CorpusItem& item, ContentSource source) {
  b.content = source;
  if (source == ContentSource::Lyrics) {
    if (!item.lyrics) throw Error("missing-lyrics", "item '" + item.id + "' has no alignment");
    b.lyrics = lyric_frames(fit_alignment(*item.lyrics, b.frames), b.frames);
  } else {
    b.local_content = content_encode_local(item.audio).frames;
  }
}

}  // namespace

ConditioningBundle build_conditioning(const CorpusItem& item, ConditioningMode mode,
                                      const AudioBuffer* reference,
                                      const ConditioningOptions& options) {
  ConditioningBundle b;
  b.style = item.style;
  switch (mode) {
    case ConditioningMode::TrainGT:
    case ConditioningMode::InferSVC_B:
    case ConditioningMode::InferSVC_C: {
      if (item.audio.empty()) throw Error("invalid-argument", "item '" + item.id + "' has no audio");
      const DomainMode tracker = mode == ConditioningMode::TrainGT ? item.domain : DomainMode::Singing;
      b.f0 = extract_f0(item.audio, tracker);
      b.amplitude = extract_amplitude(item.audio, tracker);
      b.frames = static_cast<int>(b.f0.size());
      ContentSource source = options.content;
      if (mode == ConditioningMode::InferSVC_B) source = ContentSource::Lyrics;
      if (mode == ConditioningMode::InferSVC_C) source = ContentSource::LocalAudio;
      set_content(b, item, source);
      if (mode == ConditioningMode::TrainGT) {
        b.timbre = timbre_embed(item.audio);
      } else {
        require_reference(reference);
        b.timbre = timbre_embed(*reference);
      }
      break;
    }
    case ConditioningMode::InferSVS: {
      if (!item.score) throw Error("missing-score", "synthesis needs a score");
      require_reference(reference);
      const StyleProfileTable table =
          options.styles ? *options.styles : StyleProfileTable::defaults();
      const MusicScore& score = *item.score;
      PerformanceTiming timing =
          generate_timing(score, item.style, derive_seed(options.seed, "timing"));
      b.f0 = generate_f0_curve(score, timing, item.style, derive_seed(options.seed, "f0"), table);
      b.amplitude =
          generate_amplitude(score, timing, item.style, derive_seed(options.seed, "amp"), table);
      b.frames = timing.total_frames;
      b.content = ContentSource::Lyrics;
      b.lyrics = lyric_frames(align_lyrics_to_timing(score, timing), b.frames);
      b.timbre = timbre_embed(*reference);
      b.timing = std::move(timing);
      break;
    }
  }
  check_lengths(b);
  return b;
}

ModelInput<float> to_model_input(const ConditioningBundle& b) {
  ModelInput<float> in;
  const int T = b.frames;
  in.frame_features = Mat<float>::Zero(kFrameFeatures, T);
  const double peak =
      b.amplitude.values.empty()
          ? 0.0
          : *std::max_element(b.amplitude.values.begin(), b.amplitude.values.end());
  for (int t = 0; t < T; ++t) {
    if (b.f0.voiced[t] && b.f0.values_hz[t] > 0.0) {
      in.frame_features(0, t) = static_cast<float>(std::log2(b.f0.values_hz[t] / 220.0));
      in.frame_features(1, t) = 1.0f;
    }
    in.frame_features(2, t) = peak > 0.0 ? static_cast<float>(b.amplitude.values[t] / peak) : 0.0f;
  }
  if (b.content == ContentSource::Lyrics) {
    in.phone_ids = b.lyrics.phone_ids;
    in.phone_position.assign(b.lyrics.positions.begin(), b.lyrics.positions.end());
  } else {
    in.content = b.local_content.transpose().cast<float>();
  }
  const auto& tv = b.timbre.vector;
  in.timbre = Vec<float>(static_cast<Eigen::Index>(tv.size()));
  const double scale = std::sqrt(static_cast<double>(tv.size()));
  for (std::size_t i = 0; i < tv.size(); ++i) in.timbre(i) = static_cast<float>(tv[i] * scale);
  in.style = b.style.index();
  in.pitch_template = harmonic_template(b.f0, T).cast<float>();
  return in;
}

// ---------------------------------------------------------------- training

namespace {

std::vector<std::size_t> training_items(const TrainConfig& config, const Corpus& corpus,
                                        std::vector<std::size_t>* singing,
                                        std::vector<std::size_t>* speech) {
  *singing = corpus.indices(DomainMode::Singing);
  *speech = config.mix ? corpus.indices(DomainMode::Speech) : std::vector<std::size_t>{};
  std::vector<std::size_t> all = *singing;
  all.insert(all.end(), speech->begin(), speech->end());
  return all;
}

TrainExample<float> make_example(const CorpusItem& item, const Checkpoint& ckpt) {
  ConditioningOptions opts;
  opts.content = ckpt.model.content;
  const ConditioningBundle b = build_conditioning(item, ConditioningMode::TrainGT, nullptr, opts);
  TrainExample<float> ex;
  ex.x0 = ckpt.mel_norm.normalize(mel_spectrogram(item.audio, SpectralConfig{}));
  ex.input = to_model_input(b);
  if (ex.x0.cols() != ex.input.frames())
    throw Error("shape-mismatch", "mel and conditioning lengths differ for '" + item.id + "'");
  return ex;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream s;
  s << rng;
  return s.str();
}

Rng rng_from_string(const std::string& text) {
  Rng rng;
  std::istringstream s(text);
  s >> rng;
  if (!s) throw Error("parse-error", "bad RNG state in checkpoint");
  return rng;
}

}  // namespace

std::vector<TrainExample<float>> prepare_examples(const Checkpoint& ckpt, const Corpus& corpus) {
  std::vector<std::size_t> singing, speech;
  const auto ids = training_items(ckpt.train, corpus, &singing, &speech);
  std::vector<TrainExample<float>> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(make_example(corpus.items[i], ckpt));
  return out;
}

Checkpoint train(const TrainConfig& config, ModelConfig model, const Corpus& corpus,
                 const TrainingCallbacks& callbacks, const Checkpoint* resume) {
  config.validate();
  model.content = content_source(config.variant);
  std::vector<std::size_t> singing, speech;
  const auto ids = training_items(config, corpus, &singing, &speech);
  const MixedSampler sampler(singing.size(), speech.size(), config.mix);

  Checkpoint ckpt;
  ckpt.model = model;
  ckpt.train = config;
  auto layout = std::make_shared<const ParamLayout>(model);
  if (resume) {
    if (!(resume->model == model) || resume->train.variant != config.variant)
      throw Error("config-mismatch", "resume checkpoint has a different model config");
    ckpt.mel_norm = resume->mel_norm;
  } else {
    std::vector<MelSpectrogram> mels;
    mels.reserve(ids.size());
    for (auto i : ids) mels.push_back(mel_spectrogram(corpus.items[i].audio, SpectralConfig{}));
    std::vector<const MelSpectrogram*> ptrs;
    for (const auto& m : mels) ptrs.push_back(&m);
    ckpt.mel_norm = MelNormalizer::fit(ptrs);
  }

  // Examples indexed in sampler order: singing first, then speech.
  std::vector<TrainExample<float>> examples;
  examples.reserve(ids.size());
  for (auto i : ids) examples.push_back(make_example(corpus.items[i], ckpt));

  Adam adam(layout->total(), config.learning_rate);
  Rng rng;
  if (resume) {
    ckpt.params = resume->params;
    ckpt.params.layout = layout;
    ckpt.step = resume->step;
    if (resume->optimizer)
      adam.restore(resume->optimizer->iterations, resume->optimizer->m, resume->optimizer->v);
    rng = rng_from_string(resume->rng_state);
  } else {
    ckpt.params = init_params<float>(layout, derive_seed(config.seed, "params"));
    rng.seed(derive_seed(config.seed, "train"));
  }

  const NoiseSchedule schedule(model.diffusion_steps, model.beta_start, model.beta_end);
  Params<float> grad(layout);
  std::vector<TrainExample<float>> batch(config.batch_size);
  const auto start = std::chrono::steady_clock::now();
  double loss_sum = 0.0;
  int loss_count = 0;

  auto snapshot = [&]() {
    ckpt.optimizer = OptimizerState{adam.iterations(), adam.first_moment(), adam.second_moment()};
    ckpt.rng_state = rng_to_string(rng);
  };

  while (ckpt.step < config.iterations) {
    for (auto& slot : batch) {
      const Draw d = sampler.next(rng);
      const std::size_t k = d.domain == DomainMode::Singing ? d.index : singing.size() + d.index;
      const auto& ex = examples[k];
      const int T = static_cast<int>(ex.x0.cols());
      const int len = std::min(T, config.crop_frames);
      const int offset = std::uniform_int_distribution<int>(0, T - len)(rng);
      slot.x0 = ex.x0.middleCols(offset, len);
      slot.input = ex.input.crop(offset, len);
    }
    const float loss = loss_and_grad<float>(
        ckpt.params, std::span<const TrainExample<float>>(batch), schedule, rng, grad);
    if (!std::isfinite(loss))
      throw Error("divergence", "non-finite loss at step " + std::to_string(ckpt.step + 1));
    adam.step(ckpt.params.values, grad.values);
    ++ckpt.step;
    loss_sum += loss;
    ++loss_count;

    if (ckpt.step % config.log_every == 0 || ckpt.step == config.iterations) {
      if (callbacks.log) {
        const double ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start).count();
        callbacks.log({{"step", ckpt.step},
                       {"loss", loss_sum / loss_count},
                       {"lr", config.learning_rate},
                       {"wall_ms", std::llround(ms)}});
      }
      loss_sum = 0.0;
      loss_count = 0;
    }
    if (callbacks.on_checkpoint && config.checkpoint_every > 0 &&
        ckpt.step % config.checkpoint_every == 0 && ckpt.step < config.iterations) {
      snapshot();
      callbacks.on_checkpoint(ckpt);
    }
  }
  snapshot();
  return ckpt;
}

double evaluate_eps_mse(const Checkpoint& ckpt, const std::vector<TrainExample<float>>& examples,
                        int draws, std::uint64_t seed) {
  if (examples.empty()) throw Error("invalid-argument", "no examples to evaluate");
  const NoiseSchedule schedule(ckpt.model.diffusion_steps, ckpt.model.beta_start,
                               ckpt.model.beta_end);
  Rng rng(derive_seed(seed, "eval-eps"));
  double total = 0.0;
  for (int d = 0; d < draws; ++d) {
    const std::span<const TrainExample<float>> all(examples);
    const auto noise = draw_noise<float>(all, schedule, rng);
    total += diffusion_loss<float>(ckpt.params, all, std::span<const NoiseDraw<float>>(noise),
                                   schedule, nullptr);
  }
  return total / draws;
}

Mat<float> reconstruct(const Checkpoint& ckpt, const ModelInput<float>& input, int steps,
                       std::uint64_t seed) {
  input.check(ckpt.model);
  const NoiseSchedule schedule(ckpt.model.diffusion_steps, ckpt.model.beta_start,
                               ckpt.model.beta_end);
  Rng rng(derive_seed(seed, "ddim"));
  const Denoiser<float> denoise = [&](const Mat<float>& x, int t) {
    return predict_noise<float>(ckpt.params, x, t, input);
  };
  return ddim_sample<float>(denoise, ckpt.model.n_mels, input.frames(), schedule, steps, 0.0,
                            rng);
}

// ---------------------------------------------------------------- inference

nlohmann::json InferenceReport::to_json() const {
  return {{"shift_semitones", shift_semitones}, {"frames", frames}, {"steps", steps},
          {"seed", seed}};
}

namespace {

InferenceResult render(const Checkpoint& ckpt, const ConditioningBundle& bundle,
                       const InferenceOptions& options, int shift) {
  const ModelInput<float> input = to_model_input(bundle);
  input.check(ckpt.model);
  const NoiseSchedule schedule(ckpt.model.diffusion_steps, ckpt.model.beta_start,
                               ckpt.model.beta_end);
  Rng rng(derive_seed(options.seed, "ddim"));
  const Denoiser<float> denoise = [&](const Mat<float>& x, int t) {
    return predict_noise<float>(ckpt.params, x, t, input);
  };
  const Mat<float> x = ddim_sample<float>(denoise, ckpt.model.n_mels, input.frames(), schedule,
                                          options.ddim_steps, options.eta, rng);
  InferenceResult r;
  r.mel = ckpt.mel_norm.denormalize(x, SpectralConfig{});
  r.audio = griffin_lim(r.mel, options.griffin_lim_iters, derive_seed(options.seed, "griffin-lim"));
  r.report = {shift, bundle.frames, options.ddim_steps, options.seed};
  return r;
}

int shift_source_f0(ConditioningBundle& b, const AudioBuffer& reference) {
  const double source_hz = f0_statistics(b.f0).median_hz;
  const double ref_hz = f0_statistics(extract_f0(reference, DomainMode::Speech)).median_hz;
  const int k = choose_octave_shift(source_hz, ref_hz);
  for (auto& v : b.f0.values_hz) v *= std::exp2(k);
  return 12 * k;
}

}  // namespace

InferenceResult synthesize_svs(const MusicScore& score, const StyleToken& style,
                               const AudioBuffer& reference, const Checkpoint& ckpt,
                               const InferenceOptions& options) {
  require_content_source(ckpt, ContentSource::Lyrics);
  CorpusItem request;
  request.style = style;
  request.score = score;
  int shift = 0;
  if (options.pitch_adjust) {
    PitchAdjustment adj = pitch_adjust(score, extract_f0(reference, DomainMode::Speech));
    request.score = std::move(adj.score);
    shift = adj.shift_semitones;
  }
  ConditioningOptions opts;
  opts.seed = derive_seed(options.seed, "performance");
  const auto bundle = build_conditioning(request, ConditioningMode::InferSVS, &reference, opts);
  return render(ckpt, bundle, options, shift);
}

InferenceResult convert_svc_b(const AudioBuffer& source, const AlignedLyrics& lyrics,
                              const StyleToken& style, const AudioBuffer& reference,
                              const Checkpoint& ckpt, const InferenceOptions& options) {
  require_content_source(ckpt, ContentSource::Lyrics);
  CorpusItem request;
  request.audio = source;
  request.lyrics = lyrics;
  request.style = style;
  auto bundle = build_conditioning(request, ConditioningMode::InferSVC_B, &reference);
  const int shift = options.shift_source_octave ? shift_source_f0(bundle, reference) : 0;
  return render(ckpt, bundle, options, shift);
}

InferenceResult convert_svc_c(const AudioBuffer& source, std::optional<StyleToken> style,
                              const AudioBuffer& reference, const Checkpoint& ckpt,
                              const InferenceOptions& options) {
  require_content_source(ckpt, ContentSource::LocalAudio);
  CorpusItem request;
  request.audio = source;
  request.style = style.value_or(StyleToken{});
  auto bundle = build_conditioning(request, ConditioningMode::InferSVC_C, &reference);
  const int shift = options.shift_source_octave ? shift_source_f0(bundle, reference) : 0;
  return render(ckpt, bundle, options, shift);
}

}  // namespace zs
