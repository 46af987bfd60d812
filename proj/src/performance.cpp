#include "zerosing/performance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <numbers>

#include "zerosing/error.hpp"
#include "zerosing/random.hpp"

namespace zs {

StyleProfileTable StyleProfileTable::defaults() {
  StyleProfileTable t;
  // rate, depth, onset, portamento, attack, release, sustain
  const StyleProfile pop{5.5, 0.0, 0.20, 0.08, 0.03, 0.06, 0.7};
  const StyleProfile opera{6.0, 0.0, 0.25, 0.12, 0.08, 0.12, 0.7};
  t.profiles[StyleToken{Genre::Pop, Technique::Normal}.index()] = pop;
  t.profiles[StyleToken{Genre::Pop, Technique::Vibrato}.index()] = pop;
  t.profiles[StyleToken{Genre::Pop, Technique::Vibrato}.index()].vibrato_depth_cents = 50.0;
  t.profiles[StyleToken{Genre::Opera, Technique::Normal}.index()] = opera;
  t.profiles[StyleToken{Genre::Opera, Technique::Vibrato}.index()] = opera;
  t.profiles[StyleToken{Genre::Opera, Technique::Vibrato}.index()].vibrato_depth_cents =
      120.0;
  return t;
}

StyleProfileTable StyleProfileTable::from_json(const nlohmann::json& j) {
  StyleProfileTable t = defaults();
  for (int i = 0; i < kNumStyles; ++i) {
    const std::string key = StyleToken::from_index(i).to_string();
    if (!j.contains(key)) continue;
    const auto& e = j.at(key);
    StyleProfile& p = t.profiles[i];
    p.vibrato_rate_hz = e.value("vibrato_rate_hz", p.vibrato_rate_hz);
    p.vibrato_depth_cents = e.value("vibrato_depth_cents", p.vibrato_depth_cents);
    p.vibrato_onset_s = e.value("vibrato_onset_s", p.vibrato_onset_s);
    p.portamento_s = e.value("portamento_s", p.portamento_s);
    p.attack_s = e.value("attack_s", p.attack_s);
    p.release_s = e.value("release_s", p.release_s);
    p.sustain_level = e.value("sustain_level", p.sustain_level);
    if (p.vibrato_rate_hz <= 0 || p.vibrato_depth_cents < 0 || p.vibrato_onset_s < 0 ||
        p.portamento_s < 0 || p.attack_s <= 0 || p.release_s <= 0 ||
        p.sustain_level <= 0)
      throw Error("invalid-config", "style profile '" + key + "' has invalid values");
  }
  return t;
}

PerformanceTiming generate_timing(const MusicScore& score, const StyleToken& /*style*/,
                                  std::uint64_t seed,
                                  const PerformanceOptions& options) {
  const auto nominal = score_to_frames(score, options.sample_rate_hz, options.hop);
  PerformanceTiming timing{nominal, nominal.empty() ? 0 : nominal.back().end, seed};
  Rng rng(derive_seed(seed, "timing"));
  const double frames_per_s = static_cast<double>(options.sample_rate_hz) / options.hop;
  const std::size_t n = nominal.size();

  std::vector<int> shift(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double dev = options.onset_sigma_s * standard_normal(rng);
    dev = std::clamp(dev, -options.onset_clip_s, options.onset_clip_s);
    int delta = static_cast<int>(std::lround(dev * frames_per_s));

    int limit = nominal[i].length();
    const bool abuts_prev = i > 0 && nominal[i - 1].end == nominal[i].start;
    if (abuts_prev) limit = std::min(limit, nominal[i - 1].length());
    limit = (3 * limit) / 8;
    delta = std::clamp(delta, -limit, limit);
    if (i == 0) delta = std::max(delta, -nominal[i].start);
    if (i > 0 && !abuts_prev) delta = std::max(delta, nominal[i - 1].end - nominal[i].start);
    shift[i] = delta;
  }
  for (std::size_t i = 0; i < n; ++i) {
    timing.note_spans[i].start = nominal[i].start + shift[i];
    const bool abuts_next = i + 1 < n && nominal[i].end == nominal[i + 1].start;
    if (abuts_next) timing.note_spans[i].end = nominal[i].end + shift[i + 1];
  }
  return timing;
}

namespace {

int note_at_frame(const PerformanceTiming& timing, int frame) {
  for (std::size_t i = 0; i < timing.note_spans.size(); ++i) {
    const auto& s = timing.note_spans[i];
    if (frame >= s.start && frame < s.end) return static_cast<int>(i);
  }
  return -1;
}

// Bounded piecewise-linear noise: knots every `spacing` frames in [-amp, amp].
std::vector<double> smooth_jitter(int frames, double amplitude, Rng& rng) {
  std::vector<double> out(frames, 0.0);
  if (amplitude <= 0.0 || frames == 0) return out;
  constexpr int kSpacing = 8;
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<double> knots(frames / kSpacing + 2);
  for (auto& k : knots) k = dist(rng);
  for (int f = 0; f < frames; ++f) {
    const int k = f / kSpacing;
    const double u = static_cast<double>(f % kSpacing) / kSpacing;
    out[f] = (1.0 - u) * knots[k] + u * knots[k + 1];
  }
  return out;
}

}  // namespace

F0Curve generate_f0_curve(const MusicScore& score, const PerformanceTiming& timing,
                          const StyleToken& style, std::uint64_t seed,
                          const StyleProfileTable& table,
                          const PerformanceOptions& options) {
  const StyleProfile& profile = table[style];
  const double frame_s = static_cast<double>(options.hop) / options.sample_rate_hz;
  const int frames = timing.total_frames;
  F0Curve curve{std::vector<double>(frames, 0.0), std::vector<bool>(frames, false),
                options.hop};
  Rng rng(derive_seed(seed, "f0-jitter"));
  const auto jitter = smooth_jitter(frames, options.jitter_cents, rng);

  const auto& spans = timing.note_spans;
  for (int f = 0; f < frames; ++f) {
    const int ni = note_at_frame(timing, f);
    if (ni < 0 || score.notes[ni].is_rest()) continue;
    const FrameSpan span = spans[ni];
    const double t = f * frame_s;
    const double note_start = span.start * frame_s;
    const double note_dur = span.length() * frame_s;
    double log_pitch = std::log2(midi_to_hz(*score.notes[ni].midi));

    // Cosine glide in log-pitch across each pitched-to-pitched boundary.
    auto glide = [&](int a, int b) -> std::optional<double> {
      if (a < 0 || b >= static_cast<int>(spans.size())) return std::nullopt;
      if (score.notes[a].is_rest() || score.notes[b].is_rest()) return std::nullopt;
      if (spans[a].end != spans[b].start) return std::nullopt;
      const double width = std::min({profile.portamento_s, spans[a].length() * frame_s,
                                     spans[b].length() * frame_s});
      if (width <= 0.0) return std::nullopt;
      const double boundary = spans[b].start * frame_s;
      const double u = (t - (boundary - 0.5 * width)) / width;
      if (u < 0.0 || u > 1.0) return std::nullopt;
      const double lp_a = std::log2(midi_to_hz(*score.notes[a].midi));
      const double lp_b = std::log2(midi_to_hz(*score.notes[b].midi));
      return lp_a + (lp_b - lp_a) * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
    };
    if (auto g = glide(ni - 1, ni))
      log_pitch = *g;
    else if (auto g2 = glide(ni, ni + 1))
      log_pitch = *g2;

    double cents = jitter[f];
    const double since_onset = t - note_start - profile.vibrato_onset_s;
    if (profile.vibrato_depth_cents > 0.0 && note_dur >= 0.3 && since_onset >= 0.0)
      cents += profile.vibrato_depth_cents *
               std::sin(2.0 * std::numbers::pi * profile.vibrato_rate_hz * since_onset);

    curve.values_hz[f] = std::pow(2.0, log_pitch + cents / 1200.0);
    curve.voiced[f] = true;
  }
  return curve;
}

AmplitudeEnvelope generate_amplitude(const MusicScore& score,
                                     const PerformanceTiming& timing,
                                     const StyleToken& style, std::uint64_t seed,
                                     const StyleProfileTable& table,
                                     const PerformanceOptions& options) {
  const StyleProfile& profile = table[style];
  const double frame_s = static_cast<double>(options.hop) / options.sample_rate_hz;
  AmplitudeEnvelope env{std::vector<double>(timing.total_frames, 0.0), options.hop};
  Rng rng(derive_seed(seed, "amplitude"));
  std::uniform_real_distribution<double> spread(-options.sustain_spread,
                                                options.sustain_spread);
  for (std::size_t i = 0; i < timing.note_spans.size(); ++i) {
    const double level = profile.sustain_level + spread(rng);
    if (score.notes[i].is_rest()) continue;
    const FrameSpan span = timing.note_spans[i];
    const double dur = span.length() * frame_s;
    double attack = profile.attack_s, release = profile.release_s;
    if (attack + release > dur) {
      const double scale = dur / (attack + release);
      attack *= scale;
      release *= scale;
    }
    for (int f = span.start; f < span.end && f < timing.total_frames; ++f) {
      const double t = (f - span.start) * frame_s;
      double v = level;
      if (t < attack)
        v = level * t / attack;
      else if (t > dur - release)
        v = level * (dur - t) / release;
      env.values[f] = std::max(0.0, v);
    }
  }
  return env;
}

AlignedLyrics align_lyrics_to_timing(const MusicScore& score,
                                     const PerformanceTiming& timing) {
  if (score.lyrics.empty())
    throw Error("missing-lyrics", "score has no lyrics to align");
  std::vector<std::vector<int>> per_note(score.notes.size());
  for (const auto& l : score.lyrics) per_note.at(l.note_index).push_back(l.symbol);

  AlignedLyrics out;
  int cursor = 0;
  auto fill_silence = [&](int until) {
    if (until > cursor) out.phonemes.push_back({silence_phoneme(), std::nullopt, cursor, until});
    cursor = std::max(cursor, until);
  };
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const FrameSpan span = timing.note_spans[i];
    fill_silence(span.start);
    const auto& symbols = per_note[i];
    if (span.length() <= 0) continue;
    if (symbols.empty()) {
      out.phonemes.push_back({silence_phoneme(), static_cast<int>(i), span.start, span.end});
      cursor = span.end;
      continue;
    }
    std::vector<double> weights;
    for (int s : symbols) weights.push_back(phoneme_inventory()[s].vowel ? 4.0 : 1.0);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const int k = static_cast<int>(symbols.size());
    const int length = span.length();
    double acc = 0.0;
    int start = span.start;
    for (int p = 0; p < k; ++p) {
      acc += weights[p];
      int end = p + 1 == k ? span.end
                           : span.start + static_cast<int>(std::lround(length * acc / total));
      // Keep at least one frame per remaining phoneme where possible.
      end = std::max(end, start + 1);
      end = std::min(end, span.end - std::min(k - p - 1, span.end - start - 1));
      if (end <= start) break;
      out.phonemes.push_back({symbols[p], static_cast<int>(i), start, end});
      start = end;
    }
    cursor = span.end;
  }
  fill_silence(timing.total_frames);
  return out;
}

}  // namespace zs
