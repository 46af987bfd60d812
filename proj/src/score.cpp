#include "zerosing/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "zerosing/error.hpp"

namespace zs {

using nlohmann::json;

// ---------------------------------------------------------------- Rational

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error("parse-error", "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

Rational Rational::from_double(double v) {
  if (!std::isfinite(v)) throw Error("parse-error", "non-finite beat value");
  // Continued-fraction convergents.
  constexpr std::int64_t kMaxDen = 100000;
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = v;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(x);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > kMaxDen) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / k1 - v) < 1e-12) break;
    const double frac = x - a;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  if (k1 == 0 || std::abs(static_cast<double>(h1) / k1 - v) > 1e-9)
    throw Error("parse-error", "beat value is not a simple fraction");
  return Rational(h1, k1);
}

Rational Rational::parse(std::string_view text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos)
      return Rational(std::stoll(std::string(text)), 1);
    return Rational(std::stoll(std::string(text.substr(0, slash))),
                    std::stoll(std::string(text.substr(slash + 1))));
  } catch (const std::logic_error&) {
    throw Error("parse-error", "malformed rational '" + std::string(text) + "'");
  }
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  return num_ * o.den_ <=> o.num_ * den_;
}

// ---------------------------------------------------------------- styles

StyleToken StyleToken::from_index(int index) {
  if (index < 0 || index >= kNumStyles)
    throw Error("invalid-argument", "style index out of range");
  return {static_cast<Genre>(index / 2), static_cast<Technique>(index % 2)};
}

StyleToken StyleToken::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string genre(text.substr(0, colon));
  const std::string technique =
      colon == std::string_view::npos ? "normal" : std::string(text.substr(colon + 1));
  StyleToken token;
  if (genre == "pop")
    token.genre = Genre::Pop;
  else if (genre == "opera")
    token.genre = Genre::Opera;
  else
    throw Error("parse-error", "unknown genre '" + genre + "'");
  if (technique == "normal")
    token.technique = Technique::Normal;
  else if (technique == "vibrato")
    token.technique = Technique::Vibrato;
  else
    throw Error("parse-error", "unknown technique '" + technique + "'");
  return token;
}

std::string StyleToken::to_string() const {
  return std::string(genre == Genre::Pop ? "pop" : "opera") + ":" +
         (technique == Technique::Normal ? "normal" : "vibrato");
}

// ---------------------------------------------------------------- phonemes

const std::vector<PhonemeInfo>& phoneme_inventory() {
  static const std::vector<PhonemeInfo> inventory = [] {
    std::vector<PhonemeInfo> v = {
        {"sil", "any", false}, {"sp", "any", false}, {"br", "any", false},
        // ARPAbet
        {"aa", "en", true}, {"ae", "en", true}, {"ah", "en", true},
        {"ao", "en", true}, {"aw", "en", true}, {"ay", "en", true},
        {"eh", "en", true}, {"er", "en", true}, {"ey", "en", true},
        {"ih", "en", true}, {"iy", "en", true}, {"ow", "en", true},
        {"oy", "en", true}, {"uh", "en", true}, {"uw", "en", true},
        {"b", "en", false}, {"ch", "en", false}, {"d", "en", false},
        {"dh", "en", false}, {"f", "en", false}, {"g", "en", false},
        {"hh", "en", false}, {"jh", "en", false}, {"k", "en", false},
        {"l", "en", false}, {"m", "en", false}, {"n", "en", false},
        {"ng", "en", false}, {"p", "en", false}, {"r", "en", false},
        {"s", "en", false}, {"sh", "en", false}, {"t", "en", false},
        {"th", "en", false}, {"v", "en", false}, {"w", "en", false},
        {"y", "en", false}, {"z", "en", false}, {"zh", "en", false},
        // Mandarin finals
        {"zh_a", "zh", true}, {"zh_o", "zh", true}, {"zh_e", "zh", true},
        {"zh_i", "zh", true}, {"zh_u", "zh", true}, {"zh_v", "zh", true},
        {"zh_ai", "zh", true}, {"zh_ei", "zh", true}, {"zh_ao", "zh", true},
        {"zh_ou", "zh", true}, {"zh_an", "zh", true}, {"zh_en", "zh", true},
        {"zh_ang", "zh", true}, {"zh_eng", "zh", true}, {"zh_er", "zh", true},
        // Japanese
        {"ja_a", "ja", true}, {"ja_i", "ja", true}, {"ja_u", "ja", true},
        {"ja_e", "ja", true}, {"ja_o", "ja", true}, {"ja_N", "ja", false},
        {"ja_cl", "ja", false},
    };
    return v;
  }();
  return inventory;
}

int phoneme_id(std::string_view symbol) {
  const auto& inv = phoneme_inventory();
  for (std::size_t i = 0; i < inv.size(); ++i)
    if (inv[i].symbol == symbol) return static_cast<int>(i);
  throw Error("unknown-phoneme", "unknown phoneme '" + std::string(symbol) + "'");
}

int silence_phoneme() { return 0; }

bool phoneme_allowed(int id, std::string_view language) {
  if (id < 0 || id >= kNumPhonemes) return false;
  const auto& info = phoneme_inventory()[id];
  return info.language == "any" || info.language == language;
}

// ---------------------------------------------------------------- validation

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error("parse-error", what); }

bool known_language(const std::string& lang) {
  return lang == "en" || lang == "zh" || lang == "ja";
}

Rational beats_from_json(const json& j, const char* field) {
  if (!j.contains(field)) parse_fail(std::string("missing field '") + field + "'");
  const json& v = j.at(field);
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>(), 1);
  if (v.is_number()) return Rational::from_double(v.get<double>());
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  parse_fail(std::string("field '") + field + "' must be a number or \"n/d\"");
}

json beats_to_json(const Rational& r) {
  if (r.den() == 1) return r.num();
  return r.to_string();
}

void check_format(const json& j) {
  if (!j.is_object()) parse_fail("document must be a JSON object");
  if (!j.contains("format") || !j.at("format").is_number_integer() ||
      j.at("format").get<int>() != kScoreFormat)
    parse_fail("unsupported or missing \"format\" (expected 1)");
}

}  // namespace

void validate_score(const MusicScore& score) {
  if (!(score.tempo_bpm >= 30.0 && score.tempo_bpm <= 300.0))
    parse_fail("tempo out of range [30, 300]");
  if (!known_language(score.language))
    parse_fail("unknown language '" + score.language + "'");
  const bool any_pitched = std::any_of(score.notes.begin(), score.notes.end(),
                                       [](const Note& n) { return !n.is_rest(); });
  if (score.notes.empty() || !any_pitched) parse_fail("empty score");
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& n = score.notes[i];
    if (n.midi && (*n.midi < kMinMidi || *n.midi > kMaxMidi))
      parse_fail("pitch out of range");
    if (n.duration_beats <= Rational(0)) parse_fail("nonpositive duration");
    if (n.onset_beats < Rational(0)) parse_fail("negative onset");
    if (i > 0) {
      const Note& prev = score.notes[i - 1];
      if (n.onset_beats < prev.onset_beats) parse_fail("unsorted onsets");
      if (prev.onset_beats + prev.duration_beats > n.onset_beats)
        parse_fail("overlapping notes");
    }
  }
  if (!score.lyrics.empty()) {
    std::vector<bool> referenced(score.notes.size(), false);
    int last_note = -1;
    for (const auto& l : score.lyrics) {
      if (!phoneme_allowed(l.symbol, score.language))
        parse_fail("phoneme not allowed for language " + score.language);
      if (l.note_index < 0 || l.note_index >= static_cast<int>(score.notes.size()))
        parse_fail("lyric note_index out of range");
      if (l.note_index < last_note) parse_fail("lyrics not ordered by note");
      last_note = l.note_index;
      referenced[l.note_index] = true;
    }
    for (std::size_t i = 0; i < score.notes.size(); ++i)
      if (!score.notes[i].is_rest() && !referenced[i])
        parse_fail("note " + std::to_string(i) + " has no lyric");
  }
}

void validate_alignment(const AlignedLyrics& lyrics, const MusicScore* score) {
  int previous_end = 0;
  for (const auto& p : lyrics.phonemes) {
    if (p.symbol < 0 || p.symbol >= kNumPhonemes) parse_fail("unknown phoneme id");
    if (p.start_frame < 0 || p.start_frame >= p.end_frame)
      parse_fail("phoneme span must satisfy 0 <= start < end");
    if (p.start_frame < previous_end) parse_fail("overlapping phoneme spans");
    previous_end = p.end_frame;
  }
  if (score) {
    std::vector<bool> referenced(score->notes.size(), false);
    for (const auto& p : lyrics.phonemes) {
      if (!p.note_index) continue;
      if (*p.note_index < 0 || *p.note_index >= static_cast<int>(score->notes.size()))
        parse_fail("alignment note_index out of range");
      referenced[*p.note_index] = true;
    }
    for (std::size_t i = 0; i < score->notes.size(); ++i)
      if (!score->notes[i].is_rest() && !referenced[i])
        parse_fail("note " + std::to_string(i) + " has no aligned phoneme");
  }
}

// ---------------------------------------------------------------- JSON

MusicScore score_from_json(const json& j) {
  check_format(j);
  MusicScore score;
  try {
    score.tempo_bpm = j.at("tempo_bpm").get<double>();
    score.language = j.value("language", std::string("en"));
    for (const auto& jn : j.at("notes")) {
      Note n;
      if (!jn.value("rest", false)) {
        const json& m = jn.at("midi");
        if (!m.is_number_integer()) parse_fail("midi must be an integer");
        n.midi = m.get<int>();
      }
      n.onset_beats = beats_from_json(jn, "onset_beats");
      n.duration_beats = beats_from_json(jn, "duration_beats");
      score.notes.push_back(n);
    }
    if (j.contains("lyrics"))
      for (const auto& jl : j.at("lyrics"))
        score.lyrics.push_back({phoneme_id(jl.at("symbol").get<std::string>()),
                                jl.at("note_index").get<int>()});
    if (j.contains("style")) {
      const auto& js = j.at("style");
      score.style = StyleToken::parse(js.at("genre").get<std::string>() + ":" +
                                      js.at("technique").get<std::string>());
    }
  } catch (const json::exception& e) {
    parse_fail(std::string("malformed score: ") + e.what());
  }
  validate_score(score);
  return score;
}

json score_to_json(const MusicScore& score) {
  json j;
  j["format"] = kScoreFormat;
  j["tempo_bpm"] = score.tempo_bpm;
  j["language"] = score.language;
  j["notes"] = json::array();
  for (const auto& n : score.notes) {
    json jn;
    if (n.midi)
      jn["midi"] = *n.midi;
    else
      jn["rest"] = true;
    jn["onset_beats"] = beats_to_json(n.onset_beats);
    jn["duration_beats"] = beats_to_json(n.duration_beats);
    j["notes"].push_back(jn);
  }
  if (!score.lyrics.empty()) {
    j["lyrics"] = json::array();
    for (const auto& l : score.lyrics)
      j["lyrics"].push_back({{"symbol", std::string(phoneme_inventory()[l.symbol].symbol)},
                             {"note_index", l.note_index}});
  }
  if (score.style) {
    const std::string s = score.style->to_string();
    const auto colon = s.find(':');
    j["style"] = {{"genre", s.substr(0, colon)}, {"technique", s.substr(colon + 1)}};
  }
  return j;
}

MusicScore parse_score(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(std::string("invalid JSON: ") + e.what());
  }
  return score_from_json(j);
}

std::string serialize_score(const MusicScore& score) { return score_to_json(score).dump(2); }

AlignedLyrics alignment_from_json(const json& j) {
  check_format(j);
  AlignedLyrics lyrics;
  try {
    for (const auto& jp : j.at("phonemes")) {
      AlignedPhoneme p;
      p.symbol = phoneme_id(jp.at("symbol").get<std::string>());
      if (jp.contains("note_index") && !jp.at("note_index").is_null())
        p.note_index = jp.at("note_index").get<int>();
      p.start_frame = jp.at("start_frame").get<int>();
      p.end_frame = jp.at("end_frame").get<int>();
      lyrics.phonemes.push_back(p);
    }
  } catch (const json::exception& e) {
    parse_fail(std::string("malformed alignment: ") + e.what());
  }
  validate_alignment(lyrics);
  return lyrics;
}

json alignment_to_json(const AlignedLyrics& lyrics) {
  json j;
  j["format"] = kScoreFormat;
  j["phonemes"] = json::array();
  for (const auto& p : lyrics.phonemes) {
    json jp{{"symbol", std::string(phoneme_inventory()[p.symbol].symbol)},
            {"start_frame", p.start_frame},
            {"end_frame", p.end_frame}};
    jp["note_index"] = p.note_index ? json(*p.note_index) : json(nullptr);
    j["phonemes"].push_back(jp);
  }
  return j;
}

AlignedLyrics parse_alignment(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(std::string("invalid JSON: ") + e.what());
  }
  return alignment_from_json(j);
}

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

MusicScore load_score(const std::string& path) { return parse_score(slurp(path)); }
AlignedLyrics load_alignment(const std::string& path) {
  return parse_alignment(slurp(path));
}

// ---------------------------------------------------------------- transforms

MusicScore transpose(const MusicScore& score, int semitones) {
  MusicScore out = score;
  for (auto& n : out.notes) {
    if (!n.midi) continue;
    const int shifted = *n.midi + semitones;
    if (shifted < kMinMidi || shifted > kMaxMidi)
      throw Error("out-of-range", "transposition by " + std::to_string(semitones) +
                                      " leaves MIDI range 21..108");
    n.midi = shifted;
  }
  return out;
}

std::vector<FrameSpan> score_to_frames(const MusicScore& score, int sample_rate_hz,
                                       int hop) {
  auto to_frame = [&](const Rational& beats) {
    return static_cast<int>(
        std::lround(score.beats_to_seconds(beats) * sample_rate_hz / hop));
  };
  std::vector<FrameSpan> spans;
  spans.reserve(score.notes.size());
  for (const auto& n : score.notes)
    spans.push_back({to_frame(n.onset_beats), to_frame(n.onset_beats + n.duration_beats)});
  return spans;
}

double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }
double hz_to_midi(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }

}  // namespace zs
