#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "zerosing/pipeline.hpp"

namespace zs {

struct Resonance {
  double center_hz;
  double bandwidth_hz;
  double gain_db;
};

/// A synthetic voice: source tilt relative to 1 kHz, broad fixed resonances,
/// a vowel-formant scale and the pitch registers it sings and speaks in.
struct SpeakerProfile {
  std::string id;
  double tilt_db_per_octave = 0.0;
  std::vector<Resonance> resonances;
  double formant_scale = 1.0;
  int register_midi = 60;
  double speech_f0_hz = 150.0;

  nlohmann::json to_json() const;
  static SpeakerProfile from_json(const nlohmann::json& j);
};

struct SyntheticCorpusSpec {
  int n_speakers = 2;
  int n_utterances = 10;  // per speaker
  double singing_fraction = 0.5;
  int min_notes = 4;
  int max_notes = 8;
  double tilt_range_db = 6.0;  // tilts spread evenly over [-range, +range]
  std::uint64_t seed = 0;
  std::vector<SpeakerProfile> speakers;  // derived from the seed when empty

  /// Throws "invalid-config".
  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticCorpusSpec from_json(const nlohmann::json& j);
};

std::vector<SpeakerProfile> expand_speakers(const SyntheticCorpusSpec& spec);

/// Frame-rate controls (hop 256) for one utterance.
struct VoiceControls {
  F0Curve f0;
  AmplitudeEnvelope amplitude;
  AlignedLyrics lyrics;
};

/// Additive harmonic source shaped by the speaker and phoneme envelopes,
/// plus filtered noise for fricatives and bursts. Peak-normalized to 0.5.
AudioBuffer render_voice(const SpeakerProfile& speaker, const VoiceControls& controls,
                         std::uint64_t seed);

CorpusItem synth_singing_item(const SpeakerProfile& speaker, const SyntheticCorpusSpec& spec,
                              std::uint64_t seed, const std::string& id);
/// Syllable count 0 picks 10..16 at random.
CorpusItem synth_speech_item(const SpeakerProfile& speaker, std::uint64_t seed,
                             const std::string& id, int syllables = 0);

/// Per speaker: the first round(n * singing_fraction) utterances sing.
Corpus generate_corpus(const SyntheticCorpusSpec& spec);

/// wav/, scores/, align/ and manifest.json under `dir`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir,
                  const nlohmann::json& extra = nlohmann::json::object());
Corpus load_corpus(const std::filesystem::path& manifest);

}  // namespace zs
