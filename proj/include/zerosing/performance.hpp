#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "zerosing/features.hpp"
#include "zerosing/score.hpp"

namespace zs {

/// Rule parameters for one (genre, technique) pair.
struct StyleProfile {
  double vibrato_rate_hz;
  double vibrato_depth_cents;
  double vibrato_onset_s;
  double portamento_s;
  double attack_s;
  double release_s;
  double sustain_level;
};

/// Indexed by StyleToken::index().
struct StyleProfileTable {
  std::array<StyleProfile, kNumStyles> profiles;

  static StyleProfileTable defaults();
  /// Overrides defaults with entries keyed "pop:normal" etc.
  static StyleProfileTable from_json(const nlohmann::json& j);
  const StyleProfile& operator[](const StyleToken& t) const {
    return profiles[t.index()];
  }
};

struct PerformanceOptions {
  double onset_sigma_s = 0.020;
  double onset_clip_s = 0.050;
  double jitter_cents = 5.0;
  double sustain_spread = 0.05;
  int sample_rate_hz = kSampleRate;
  int hop = 256;
};

struct PerformanceTiming {
  std::vector<FrameSpan> note_spans;
  int total_frames = 0;
  std::uint64_t seed = 0;
};

/// Seeded Gaussian onset deviations on the nominal spans. Each boundary
/// moves by at most 3/8 of its shorter neighbour, so realized durations stay
/// within [25%, 200%] of nominal; the final end is fixed.
PerformanceTiming generate_timing(const MusicScore& score, const StyleToken& style,
                                  std::uint64_t seed,
                                  const PerformanceOptions& options = {});

F0Curve generate_f0_curve(const MusicScore& score, const PerformanceTiming& timing,
                          const StyleToken& style, std::uint64_t seed,
                          const StyleProfileTable& table = StyleProfileTable::defaults(),
                          const PerformanceOptions& options = {});

AmplitudeEnvelope generate_amplitude(
    const MusicScore& score, const PerformanceTiming& timing, const StyleToken& style,
    std::uint64_t seed, const StyleProfileTable& table = StyleProfileTable::defaults(),
    const PerformanceOptions& options = {});

/// Distributes each note's realized span over its lyric phonemes (vowels
/// weighted 4:1 over consonants); uncovered frames become "sil".
AlignedLyrics align_lyrics_to_timing(const MusicScore& score,
                                     const PerformanceTiming& timing);

}  // namespace zs
