#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace zs {

/// Exact beat arithmetic. Always normalized with a positive denominator.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Nearest fraction with denominator <= 100000; rejects values that are
  /// not representable within 1e-9.
  static Rational from_double(double v);
  /// Accepts "3", "3/2", "-1/4".
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / den_; }
  std::string to_string() const;

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  bool operator==(const Rational& o) const = default;
  std::strong_ordering operator<=>(const Rational& o) const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

enum class Genre { Pop, Opera };
enum class Technique { Normal, Vibrato };

struct StyleToken {
  Genre genre = Genre::Pop;
  Technique technique = Technique::Normal;

  /// Row in the style table: genre * 2 + technique.
  int index() const {
    return static_cast<int>(genre) * 2 + static_cast<int>(technique);
  }
  static StyleToken from_index(int index);
  /// "pop:normal", "opera:vibrato", ...
  static StyleToken parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const StyleToken&) const = default;
};

inline constexpr int kNumStyles = 4;
inline constexpr int kMinMidi = 21;
inline constexpr int kMaxMidi = 108;

// ---------------------------------------------------------------- phonemes

struct PhonemeInfo {
  std::string_view symbol;
  std::string_view language;  // "any", "en", "zh", "ja"
  bool vowel;
};

inline constexpr int kNumPhonemes = 64;
/// Fixed inventory; id = position.
const std::vector<PhonemeInfo>& phoneme_inventory();
/// Throws "unknown-phoneme".
int phoneme_id(std::string_view symbol);
/// Silence symbol id ("sil").
int silence_phoneme();
bool phoneme_allowed(int id, std::string_view language);

// ---------------------------------------------------------------- scores

struct Note {
  std::optional<int> midi;  // nullopt = rest
  Rational onset_beats;
  Rational duration_beats;

  bool is_rest() const { return !midi.has_value(); }
  bool operator==(const Note&) const = default;
};

/// Note-level lyric: a phoneme attached to a note (score files).
struct ScoreLyric {
  int symbol;
  int note_index;
  bool operator==(const ScoreLyric&) const = default;
};

struct MusicScore {
  std::vector<Note> notes;
  double tempo_bpm = 120.0;
  std::string language = "en";
  std::vector<ScoreLyric> lyrics;  // optional; empty if absent
  std::optional<StyleToken> style;

  double beats_to_seconds(const Rational& beats) const {
    return beats.to_double() * 60.0 / tempo_bpm;
  }
  bool operator==(const MusicScore&) const = default;
};

/// Frame-aligned phoneme (alignment files and encoder input).
struct AlignedPhoneme {
  int symbol;
  std::optional<int> note_index;
  int start_frame;
  int end_frame;
  bool operator==(const AlignedPhoneme&) const = default;
};

struct AlignedLyrics {
  std::vector<AlignedPhoneme> phonemes;
  bool operator==(const AlignedLyrics&) const = default;

  int end_frame() const {
    return phonemes.empty() ? 0 : phonemes.back().end_frame;
  }
};

struct FrameSpan {
  int start;
  int end;  // exclusive
  int length() const { return end - start; }
  bool operator==(const FrameSpan&) const = default;
};

inline constexpr int kScoreFormat = 1;

/// Validates every score invariant; throws "parse-error" with a distinct
/// message per violation.
void validate_score(const MusicScore& score);
void validate_alignment(const AlignedLyrics& lyrics,
                        const MusicScore* score = nullptr);

MusicScore parse_score(std::string_view text);
MusicScore score_from_json(const nlohmann::json& j);
nlohmann::json score_to_json(const MusicScore& score);
std::string serialize_score(const MusicScore& score);

AlignedLyrics parse_alignment(std::string_view text);
AlignedLyrics alignment_from_json(const nlohmann::json& j);
nlohmann::json alignment_to_json(const AlignedLyrics& lyrics);

MusicScore load_score(const std::string& path);
AlignedLyrics load_alignment(const std::string& path);

/// Shifts every pitched note; throws "out-of-range" if any leaves 21..108.
MusicScore transpose(const MusicScore& score, int semitones);

/// Nominal per-note frame spans (rests included).
std::vector<FrameSpan> score_to_frames(const MusicScore& score,
                                       int sample_rate_hz, int hop);

double midi_to_hz(double midi);
double hz_to_midi(double hz);

}  // namespace zs
