#include "zerosing/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "zerosing/error.hpp"
#include "zerosing/random.hpp"
#include "zerosing/wav.hpp"

namespace zs {

using nlohmann::json;

namespace {

constexpr int kHop = 256;
constexpr double kPeak = 0.5;
constexpr double kSourceSlopeDb = 0.0;

enum class Kind { Silence, Vowel, Voiced, Fricative, Plosive };

struct PhoneAcoustics {
  Kind kind;
  double f1, f2, f3;
  double voiced_gain;
  double noise_hz;
  double noise_bw_hz;
  double noise_gain;
};

PhoneAcoustics acoustics(int id) {
  const std::string_view s = phoneme_inventory()[id].symbol;
  auto vowel = [](double f1, double f2, double f3) {
    return PhoneAcoustics{Kind::Vowel, f1, f2, f3, 1.0, 0, 0, 0};
  };
  auto voiced = [](double f1, double f2, double f3, double g) {
    return PhoneAcoustics{Kind::Voiced, f1, f2, f3, g, 0, 0, 0};
  };
  auto noise = [](Kind k, double hz, double bw, double g) {
    return PhoneAcoustics{k, 500, 1500, 2500, 0.0, hz, bw, g};
  };
  if (s == "sil" || s == "sp") return {Kind::Silence, 500, 1500, 2500, 0, 0, 0, 0};
  if (s == "br") return noise(Kind::Fricative, 1500, 2000, 0.03);
  if (s == "aa" || s == "zh_a" || s == "ja_a") return vowel(730, 1090, 2440);
  if (s == "ae") return vowel(660, 1720, 2410);
  if (s == "ah" || s == "zh_e") return vowel(640, 1190, 2390);
  if (s == "ao" || s == "zh_o" || s == "ja_o") return vowel(570, 840, 2410);
  if (s == "eh" || s == "ja_e") return vowel(530, 1840, 2480);
  if (s == "ey" || s == "zh_ei") return vowel(480, 2000, 2600);
  if (s == "ih") return vowel(390, 1990, 2550);
  if (s == "iy" || s == "zh_i" || s == "ja_i") return vowel(270, 2290, 3010);
  if (s == "uh") return vowel(440, 1020, 2240);
  if (s == "uw" || s == "zh_u" || s == "ja_u") return vowel(300, 870, 2240);
  if (s == "er" || s == "zh_er") return vowel(490, 1350, 1690);
  if (s == "ow" || s == "zh_ou") return vowel(500, 900, 2400);
  if (s == "m") return voiced(250, 1100, 2300, 0.35);
  if (s == "n" || s == "ng" || s == "ja_N") return voiced(250, 1600, 2500, 0.35);
  if (s == "l") return voiced(360, 1300, 2700, 0.6);
  if (s == "r") return voiced(420, 1300, 1600, 0.6);
  if (s == "w") return voiced(300, 700, 2200, 0.55);
  if (s == "y") return voiced(280, 2200, 2900, 0.55);
  if (s == "s" || s == "z") return noise(Kind::Fricative, 5500, 2000, 0.25);
  if (s == "sh" || s == "zh" || s == "ch" || s == "jh") return noise(Kind::Fricative, 3000, 1500, 0.25);
  if (s == "f" || s == "th" || s == "v" || s == "dh") return noise(Kind::Fricative, 4000, 4000, 0.1);
  if (s == "hh") return noise(Kind::Fricative, 1500, 2500, 0.1);
  if (s == "t" || s == "d") return noise(Kind::Plosive, 4000, 3000, 0.3);
  if (s == "k" || s == "g") return noise(Kind::Plosive, 2000, 1500, 0.3);
  if (s == "p" || s == "b" || s == "ja_cl") return noise(Kind::Plosive, 1000, 1500, 0.3);
  if (phoneme_inventory()[id].vowel) return vowel(500, 1500, 2500);
  return voiced(400, 1500, 2500, 0.5);
}

double peak_gain(double f, double center, double bw, double gain) {
  const double x = (f - center) / bw;
  return gain / (1.0 + x * x);
}

double speaker_gain(const SpeakerProfile& sp, double f) {
  double g = std::pow(10.0, (sp.tilt_db_per_octave + kSourceSlopeDb) * std::log2(f / 1000.0) / 20.0);
  for (const auto& r : sp.resonances)
    g *= 1.0 + peak_gain(f, r.center_hz, r.bandwidth_hz, std::pow(10.0, r.gain_db / 20.0) - 1.0);
  return g;
}

double phone_gain(const PhoneAcoustics& a, double scale, double f) {
  return 0.2 + peak_gain(f, a.f1 * scale, 90.0 * scale, 1.0) +
         peak_gain(f, a.f2 * scale, 110.0 * scale, 0.7) +
         peak_gain(f, a.f3 * scale, 160.0 * scale, 0.4);
}

// RBJ band-pass (constant 0 dB peak).
struct Biquad {
  double b0 = 0, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;

  void set(double center_hz, double bw_hz, double sr) {
    const double w0 = 2.0 * std::numbers::pi * std::min(center_hz, 0.45 * sr) / sr;
    const double q = std::max(center_hz / bw_hz, 0.3);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b1 = 0.0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w0) / a0;
    a2 = (1.0 - alpha) / a0;
  }
  double operator()(double x) {
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    return y;
  }
};

std::vector<int> frame_phones(const AlignedLyrics& lyrics, int frames) {
  std::vector<int> ids(frames, silence_phoneme());
  for (const auto& p : lyrics.phonemes)
    for (int f = std::max(0, p.start_frame); f < std::min(p.end_frame, frames); ++f)
      ids[f] = p.symbol;
  return ids;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

const std::vector<std::string_view>& lyric_vowels() {
  static const std::vector<std::string_view> v = {"aa", "ae", "ah", "eh", "ih", "iy", "ow", "uw"};
  return v;
}
const std::vector<std::string_view>& lyric_consonants() {
  static const std::vector<std::string_view> c = {"l", "m", "n", "r", "w", "y", "s", "sh",
                                                   "hh", "t", "k", "p"};
  return c;
}

}  // namespace

// ---------------------------------------------------------------- profiles

json SpeakerProfile::to_json() const {
  json res = json::array();
  for (const auto& r : resonances)
    res.push_back({{"center_hz", r.center_hz}, {"bandwidth_hz", r.bandwidth_hz}, {"gain_db", r.gain_db}});
  return {{"id", id},
          {"tilt_db_per_octave", tilt_db_per_octave},
          {"resonances", res},
          {"formant_scale", formant_scale},
          {"register_midi", register_midi},
          {"speech_f0_hz", speech_f0_hz}};
}

SpeakerProfile SpeakerProfile::from_json(const json& j) {
  try {
    SpeakerProfile s;
    s.id = j.at("id").get<std::string>();
    s.tilt_db_per_octave = j.at("tilt_db_per_octave").get<double>();
    for (const auto& r : j.value("resonances", json::array()))
      s.resonances.push_back({r.at("center_hz").get<double>(), r.at("bandwidth_hz").get<double>(),
                              r.at("gain_db").get<double>()});
    s.formant_scale = j.value("formant_scale", 1.0);
    s.register_midi = j.value("register_midi", 60);
    s.speech_f0_hz = j.value("speech_f0_hz", 150.0);
    return s;
  } catch (const json::exception& e) {
    throw Error("invalid-config", std::string("speaker profile: ") + e.what());
  }
}

void SyntheticCorpusSpec::validate() const {
  if (n_speakers < 2) throw Error("invalid-config", "n_speakers must be >= 2");
  if (n_utterances < 1) throw Error("invalid-config", "n_utterances must be >= 1");
  if (!(singing_fraction >= 0.0 && singing_fraction <= 1.0))
    throw Error("invalid-config", "singing_fraction must be in [0, 1]");
  if (min_notes < 1 || max_notes < min_notes)
    throw Error("invalid-config", "need 1 <= min_notes <= max_notes");
  if (!(tilt_range_db >= 0.0)) throw Error("invalid-config", "tilt_range_db must be >= 0");
  if (!speakers.empty() && static_cast<int>(speakers.size()) != n_speakers)
    throw Error("invalid-config", "speaker list length differs from n_speakers");
}

json SyntheticCorpusSpec::to_json() const {
  json j{{"n_speakers", n_speakers},     {"n_utterances", n_utterances},
         {"singing_fraction", singing_fraction}, {"min_notes", min_notes},
         {"max_notes", max_notes},       {"tilt_range_db", tilt_range_db},
         {"seed", seed}};
  if (!speakers.empty()) {
    j["speakers"] = json::array();
    for (const auto& s : speakers) j["speakers"].push_back(s.to_json());
  }
  return j;
}

SyntheticCorpusSpec SyntheticCorpusSpec::from_json(const json& j) {
  SyntheticCorpusSpec s;
  try {
    s.n_speakers = j.value("n_speakers", s.n_speakers);
    s.n_utterances = j.value("n_utterances", s.n_utterances);
    s.singing_fraction = j.value("singing_fraction", s.singing_fraction);
    s.min_notes = j.value("min_notes", s.min_notes);
    s.max_notes = j.value("max_notes", s.max_notes);
    s.tilt_range_db = j.value("tilt_range_db", s.tilt_range_db);
    s.seed = j.value("seed", s.seed);
    if (j.contains("speakers"))
      for (const auto& sp : j.at("speakers")) s.speakers.push_back(SpeakerProfile::from_json(sp));
  } catch (const json::exception& e) {
    throw Error("invalid-config", std::string("corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::vector<SpeakerProfile> expand_speakers(const SyntheticCorpusSpec& spec) {
  spec.validate();
  if (!spec.speakers.empty()) return spec.speakers;
  std::vector<SpeakerProfile> out;
  for (int i = 0; i < spec.n_speakers; ++i) {
    Rng rng(derive_seed(spec.seed, "speaker", i));
    SpeakerProfile s;
    s.id = "spk" + std::to_string(i);
    s.tilt_db_per_octave = -spec.tilt_range_db + 2.0 * spec.tilt_range_db * i / (spec.n_speakers - 1);
    s.resonances.push_back({uniform(rng, 500, 1000), 300, uniform(rng, -4, 4)});
    s.resonances.push_back({uniform(rng, 2500, 3500), 500, uniform(rng, 0, 8)});
    s.formant_scale = uniform(rng, 0.92, 1.08);
    s.register_midi = uniform_int(rng, 52, 64);
    s.speech_f0_hz = midi_to_hz(s.register_midi - 5 + uniform(rng, -2, 2));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- rendering

AudioBuffer render_voice(const SpeakerProfile& speaker, const VoiceControls& c, std::uint64_t seed) {
  const int T = static_cast<int>(c.f0.size());
  if (T < 2 || c.amplitude.size() != c.f0.size())
    throw Error("shape-mismatch", "render_voice needs equal-length controls of >= 2 frames");
  const double sr = kSampleRate;
  const double nyquist_guard = 0.475 * sr;
  const std::vector<int> phones = frame_phones(c.lyrics, T);

  // Harmonic amplitudes and noise gain at each frame centre.
  double fallback = speaker.speech_f0_hz;
  for (int t = 0; t < T; ++t)
    if (c.f0.voiced[t] && c.f0.values_hz[t] > 0.0) {
      fallback = c.f0.values_hz[t];
      break;
    }
  std::vector<double> f0(T);
  for (int t = 0; t < T; ++t) {
    if (c.f0.voiced[t] && c.f0.values_hz[t] > 0.0) fallback = c.f0.values_hz[t];
    f0[t] = fallback;
  }
  const double min_f0 = *std::min_element(f0.begin(), f0.end());
  const int max_h = std::max(1, static_cast<int>(nyquist_guard / std::max(min_f0, 30.0)));
  Eigen::MatrixXd harm = Eigen::MatrixXd::Zero(max_h, T);
  std::vector<double> noise_gain(T, 0.0);
  std::vector<PhoneAcoustics> ac(T);
  for (int t = 0; t < T; ++t) {
    ac[t] = acoustics(phones[t]);
    const double amp = c.amplitude.values[t];
    const bool voiced = c.f0.voiced[t] && c.f0.values_hz[t] > 0.0;
    if (voiced && ac[t].voiced_gain > 0.0)
      for (int h = 1; h <= max_h; ++h) {
        const double f = h * f0[t];
        if (f > nyquist_guard) break;
        harm(h - 1, t) = amp * ac[t].voiced_gain * speaker_gain(speaker, f) *
                         phone_gain(ac[t], speaker.formant_scale, f);
      }
    if (ac[t].kind == Kind::Fricative) noise_gain[t] = ac[t].noise_gain * std::max(amp, 0.3);
    if (ac[t].kind == Kind::Plosive) {
      // Closure, then a two-frame burst at the end of the phoneme.
      const bool burst = t + 2 >= T || phones[t + 1] != phones[t] || phones[t + 2] != phones[t];
      noise_gain[t] = burst ? ac[t].noise_gain * std::max(amp, 0.3) : 0.0;
    }
  }

  const std::size_t n = static_cast<std::size_t>(T - 1) * kHop;
  AudioBuffer out;
  out.samples.assign(n, 0.0);
  Rng rng(derive_seed(seed, "render-noise"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Biquad filter;
  int filter_frame = -1;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(i / kHop);
    const double w = static_cast<double>(i % kHop) / kHop;
    const double hz = (1.0 - w) * f0[k] + w * f0[k + 1];
    phase += 2.0 * std::numbers::pi * hz / sr;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    double y = 0.0;
    for (int h = 1; h <= max_h; ++h) {
      const double a = (1.0 - w) * harm(h - 1, k) + w * harm(h - 1, k + 1);
      if (a == 0.0) continue;
      if (h * hz > nyquist_guard) break;
      y += a * std::sin(h * phase);
    }
    const int nearest = w < 0.5 ? k : k + 1;
    if (nearest != filter_frame && noise_gain[nearest] > 0.0) {
      filter.set(ac[nearest].noise_hz, ac[nearest].noise_bw_hz, sr);
      filter_frame = nearest;
    }
    const double g = (1.0 - w) * noise_gain[k] + w * noise_gain[k + 1];
    const double e = filter(gauss(rng));
    y += g * e;
    out.samples[i] = y;
  }
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out.samples) v *= kPeak / peak;
  return out;
}

// ---------------------------------------------------------------- items

CorpusItem synth_singing_item(const SpeakerProfile& speaker, const SyntheticCorpusSpec& spec,
                              std::uint64_t seed, const std::string& id) {
  Rng rng(derive_seed(seed, "singing-score"));
  MusicScore score;
  score.tempo_bpm = 120.0;
  score.language = "en";
  const Rational half(1, 2);
  const std::vector<Rational> lengths = {Rational(1, 2), Rational(1), Rational(1),
                                         Rational(3, 2), Rational(2)};
  Rational at(0);
  auto add = [&](std::optional<int> midi, Rational dur) {
    score.notes.push_back({midi, at, dur});
    at = at + dur;
  };
  add(std::nullopt, half);
  const int count = uniform_int(rng, spec.min_notes, spec.max_notes);
  int pitch = speaker.register_midi + uniform_int(rng, -3, 3);
  for (int i = 0; i < count; ++i) {
    if (i > 0 && i + 1 < count && uniform01(rng) < 0.1) add(std::nullopt, half);
    const int note = static_cast<int>(score.notes.size());
    Rational dur = lengths[uniform_int(rng, 0, static_cast<int>(lengths.size()) - 1)];
    if (i + 1 == count && at + dur < Rational(9, 2)) dur = Rational(9, 2) - at;
    add(pitch, dur);
    if (uniform01(rng) < 0.7) {
      const auto& cons = lyric_consonants();
      score.lyrics.push_back({phoneme_id(cons[uniform_int(rng, 0, static_cast<int>(cons.size()) - 1)]), note});
    }
    const auto& vow = lyric_vowels();
    score.lyrics.push_back({phoneme_id(vow[uniform_int(rng, 0, static_cast<int>(vow.size()) - 1)]), note});
    pitch = std::clamp(pitch + uniform_int(rng, -4, 4), speaker.register_midi - 7,
                       speaker.register_midi + 7);
  }
  add(std::nullopt, half);
  const StyleToken style = StyleToken::from_index(uniform_int(rng, 0, kNumStyles - 1));
  score.style = style;
  validate_score(score);

  VoiceControls c;
  const PerformanceTiming timing = generate_timing(score, style, derive_seed(seed, "timing"));
  c.f0 = generate_f0_curve(score, timing, style, derive_seed(seed, "f0"));
  c.amplitude = generate_amplitude(score, timing, style, derive_seed(seed, "amp"));
  c.lyrics = align_lyrics_to_timing(score, timing);

  CorpusItem item;
  item.id = id;
  item.audio = render_voice(speaker, c, derive_seed(seed, "render"));
  item.domain = DomainMode::Singing;
  item.score = std::move(score);
  item.lyrics = std::move(c.lyrics);
  item.speaker = speaker.id;
  item.style = style;
  return item;
}

CorpusItem synth_speech_item(const SpeakerProfile& speaker, std::uint64_t seed,
                             const std::string& id, int syllables) {
  Rng rng(derive_seed(seed, "speech"));
  if (syllables <= 0) syllables = uniform_int(rng, 10, 16);
  AlignedLyrics lyrics;
  int frame = 0;
  auto push = [&](std::string_view sym, int len) {
    lyrics.phonemes.push_back({phoneme_id(sym), std::nullopt, frame, frame + len});
    frame += len;
  };
  struct Syllable { int start, end; double loudness; bool accent; };
  std::vector<Syllable> syl;
  push("sil", uniform_int(rng, 6, 10));
  for (int s = 0; s < syllables; ++s) {
    const int start = frame;
    if (uniform01(rng) < 0.8) {
      const auto& cons = lyric_consonants();
      push(cons[uniform_int(rng, 0, static_cast<int>(cons.size()) - 1)], uniform_int(rng, 3, 6));
    }
    const auto& vow = lyric_vowels();
    push(vow[uniform_int(rng, 0, static_cast<int>(vow.size()) - 1)], uniform_int(rng, 6, 14));
    syl.push_back({start, frame, uniform(rng, 0.7, 1.0), uniform01(rng) < 0.3});
    if (s + 1 < syllables && uniform01(rng) < 0.12) push("sp", uniform_int(rng, 6, 12));
  }
  push("sil", uniform_int(rng, 6, 10));
  const int T = frame;

  VoiceControls c;
  c.lyrics = lyrics;
  c.f0.values_hz.assign(T, 0.0);
  c.f0.voiced.assign(T, false);
  c.amplitude.values.assign(T, 0.0);
  const double drift_rate = uniform(rng, 0.5, 1.5), drift_phase = uniform(rng, 0, 2 * std::numbers::pi);
  for (const auto& s : syl) {
    for (int t = s.start; t < s.end; ++t) {
      const double progress = static_cast<double>(t) / T;
      const double pos = (t - s.start + 0.5) / (s.end - s.start);
      double octaves = 0.2 * (0.5 - progress) +
                       0.08 * std::sin(2 * std::numbers::pi * drift_rate * progress + drift_phase);
      if (s.accent) octaves += 0.1 * std::sin(std::numbers::pi * pos);
      c.f0.values_hz[t] = speaker.speech_f0_hz * std::exp2(octaves);
      c.f0.voiced[t] = true;
      c.amplitude.values[t] = s.loudness * (0.3 + 0.7 * std::sin(std::numbers::pi * pos));
    }
  }

  CorpusItem item;
  item.id = id;
  item.audio = render_voice(speaker, c, derive_seed(seed, "render"));
  item.domain = DomainMode::Speech;
  item.lyrics = std::move(lyrics);
  item.speaker = speaker.id;
  item.style = StyleToken{};
  return item;
}

Corpus generate_corpus(const SyntheticCorpusSpec& spec) {
  const auto speakers = expand_speakers(spec);
  const int n_sing = static_cast<int>(std::lround(spec.n_utterances * spec.singing_fraction));
  Corpus corpus;
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    for (int u = 0; u < spec.n_utterances; ++u) {
      const std::uint64_t seed = derive_seed(spec.seed, speakers[s].id, u);
      char id[64];
      if (u < n_sing) {
        std::snprintf(id, sizeof id, "%s_sing%03d", speakers[s].id.c_str(), u);
        corpus.items.push_back(synth_singing_item(speakers[s], spec, seed, id));
      } else {
        std::snprintf(id, sizeof id, "%s_speech%03d", speakers[s].id.c_str(), u);
        corpus.items.push_back(synth_speech_item(speakers[s], seed, id, 0));
      }
    }
  }
  return corpus;
}

// ---------------------------------------------------------------- files

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir, const json& extra) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"wav", "scores", "align"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error("io-error", "cannot create " + (dir / sub).string() + ": " + ec.message());
  }
  auto write_text = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw Error("io-error", "cannot write " + p.string());
    out << text << '\n';
  };
  json manifest = extra;
  manifest["format"] = 1;
  manifest["items"] = json::array();
  for (const auto& item : corpus.items) {
    json entry{{"id", item.id},
               {"path", "wav/" + item.id + ".wav"},
               {"domain", to_string(item.domain)},
               {"speaker", item.speaker},
               {"style", item.style.to_string()},
               {"score_path", nullptr},
               {"align_path", nullptr}};
    write_wav(dir / "wav" / (item.id + ".wav"), item.audio);
    if (item.score) {
      entry["score_path"] = "scores/" + item.id + ".json";
      write_text(dir / "scores" / (item.id + ".json"), score_to_json(*item.score).dump(1));
    }
    if (item.lyrics) {
      entry["align_path"] = "align/" + item.id + ".json";
      write_text(dir / "align" / (item.id + ".json"), alignment_to_json(*item.lyrics).dump(1));
    }
    manifest["items"].push_back(entry);
  }
  write_text(dir / "manifest.json", manifest.dump(1));
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("io-error", "cannot open " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw Error("parse-error", std::string("manifest: ") + e.what());
  }
  const auto base = manifest_path.parent_path();
  Corpus corpus;
  try {
    for (const auto& e : manifest.at("items")) {
      CorpusItem item;
      item.id = e.at("id").get<std::string>();
      item.audio = read_wav(base / e.at("path").get<std::string>());
      item.domain = domain_from_string(e.at("domain").get<std::string>());
      item.speaker = e.value("speaker", "");
      item.style = StyleToken::parse(e.value("style", "pop:normal"));
      if (!e.at("score_path").is_null())
        item.score = load_score((base / e.at("score_path").get<std::string>()).string());
      if (!e.at("align_path").is_null())
        item.lyrics = load_alignment((base / e.at("align_path").get<std::string>()).string());
      if (item.domain == DomainMode::Singing && !item.score)
        throw Error("missing-score", "singing item '" + item.id + "' has no score");
      if (item.domain == DomainMode::Speech && item.score)
        throw Error("parse-error", "speech item '" + item.id + "' must not carry a score");
      corpus.items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw Error("parse-error", std::string("manifest: ") + e.what());
  }
  return corpus;
}

}  // namespace zs
