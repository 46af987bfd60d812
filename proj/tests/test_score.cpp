#include <gtest/gtest.h>

#include "scores.hpp"
#include "zerosing/error.hpp"
#include "zerosing/score.hpp"

using namespace zs;
using zs::testing::legato;

namespace {

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Rational, ArithmeticAndParsing) {
  EXPECT_EQ(Rational(2, 4), Rational(1, 2));
  EXPECT_EQ(Rational(1, -2), Rational(-1, 2));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational::parse("3/2"), Rational(3, 2));
  EXPECT_EQ(Rational::parse("-1/4"), Rational(-1, 4));
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  EXPECT_EQ(Rational::from_double(0.75), Rational(3, 4));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_THROW(Rational::parse("1/0"), Error);
  EXPECT_THROW(Rational::parse("x"), Error);
  EXPECT_THROW(Rational::from_double(0.1234567891234), Error);
}

TEST(Style, IndexAndParse) {
  for (int i = 0; i < kNumStyles; ++i) {
    const auto t = StyleToken::from_index(i);
    EXPECT_EQ(t.index(), i);
    EXPECT_EQ(StyleToken::parse(t.to_string()), t);
  }
  EXPECT_EQ(StyleToken::parse("opera:vibrato").index(), 3);
  EXPECT_THROW(StyleToken::parse("jazz:normal"), Error);
}

TEST(Phonemes, Inventory) {
  EXPECT_EQ(phoneme_inventory().size(), static_cast<std::size_t>(kNumPhonemes));
  EXPECT_EQ(phoneme_inventory()[silence_phoneme()].symbol, "sil");
  EXPECT_TRUE(phoneme_allowed(phoneme_id("sil"), "ja"));
  EXPECT_TRUE(phoneme_allowed(phoneme_id("aa"), "en"));
  EXPECT_FALSE(phoneme_allowed(phoneme_id("aa"), "zh"));
  try {
    phoneme_id("QQ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "unknown-phoneme");
  }
}

TEST(Score, SingleNoteDuration) {
  const auto s = parse_score(R"({"format":1,"tempo_bpm":120,"notes":[
      {"midi":69,"onset_beats":0,"duration_beats":1}],
      "lyrics":[{"symbol":"aa","note_index":0}]})");
  ASSERT_EQ(s.notes.size(), 1u);
  EXPECT_DOUBLE_EQ(s.beats_to_seconds(s.notes[0].duration_beats), 0.5);
}

TEST(Score, InvariantViolations) {
  auto base = legato({60, 62});
  auto overlapping = base;
  overlapping.notes[1].onset_beats = Rational(1, 2);
  EXPECT_EQ(error_message([&] { validate_score(overlapping); }), "overlapping notes");

  auto high = base;
  high.notes[0].midi = 200;
  EXPECT_EQ(error_message([&] { validate_score(high); }), "pitch out of range");

  auto unsorted = base;
  std::swap(unsorted.notes[0], unsorted.notes[1]);
  EXPECT_EQ(error_message([&] { validate_score(unsorted); }), "unsorted onsets");

  auto slow = base;
  slow.tempo_bpm = 10;
  EXPECT_NE(error_message([&] { validate_score(slow); }).find("tempo"), std::string::npos);

  MusicScore rests;
  rests.notes.push_back({std::nullopt, Rational(0), Rational(1)});
  EXPECT_EQ(error_message([&] { validate_score(rests); }), "empty score");

  auto bare = base;
  bare.lyrics.pop_back();
  EXPECT_NE(error_message([&] { validate_score(bare); }).find("no lyric"), std::string::npos);
}

TEST(Score, ParseErrorsAreCategorized) {
  for (const char* text : {"not json", R"({"format":2,"tempo_bpm":120,"notes":[]})",
                           R"({"format":1,"notes":[]})",
                           R"({"format":1,"tempo_bpm":120,"notes":[{"midi":60}]})"}) {
    try {
      parse_score(text);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), "parse-error");
    }
  }
}

TEST(Score, FractionalBeatsAndRests) {
  const auto s = parse_score(R"({"format":1,"tempo_bpm":90,"language":"en","notes":[
      {"midi":60,"onset_beats":0,"duration_beats":"1/3"},
      {"rest":true,"onset_beats":"1/3","duration_beats":"2/3"},
      {"midi":64,"onset_beats":1,"duration_beats":0.5}],
      "lyrics":[{"symbol":"aa","note_index":0},{"symbol":"iy","note_index":2}],
      "style":{"genre":"opera","technique":"vibrato"}})");
  EXPECT_EQ(s.notes[0].duration_beats, Rational(1, 3));
  EXPECT_TRUE(s.notes[1].is_rest());
  EXPECT_EQ(s.notes[2].duration_beats, Rational(1, 2));
  EXPECT_EQ(s.style->index(), 3);
}

TEST(Score, RoundTripProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = zs::testing::random_score(rng);
    ASSERT_NO_THROW(validate_score(s));
    EXPECT_EQ(parse_score(serialize_score(s)), s) << serialize_score(s);
  }
}

TEST(Alignment, RoundTripAndValidation) {
  AlignedLyrics a;
  a.phonemes = {{silence_phoneme(), std::nullopt, 0, 3},
                {phoneme_id("l"), 0, 3, 5},
                {phoneme_id("aa"), 0, 5, 20}};
  EXPECT_EQ(parse_alignment(alignment_to_json(a).dump()), a);

  auto bad = a;
  bad.phonemes[2].start_frame = 4;
  EXPECT_THROW(validate_alignment(bad), Error);
  bad = a;
  bad.phonemes[1].end_frame = 3;
  EXPECT_THROW(validate_alignment(bad), Error);

  const auto score = legato({60, 62});
  EXPECT_THROW(validate_alignment(a, &score), Error);  // note 1 unaligned
}

TEST(Transpose, Definition) {
  const auto s = legato({69});
  EXPECT_EQ(*transpose(s, -12).notes[0].midi, 57);
  EXPECT_EQ(transpose(s, 0), s);
  try {
    transpose(legato({21}), -1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "out-of-range");
  }
}

TEST(Transpose, RestsUntouched) {
  auto s = legato({60, 64});
  s.notes.push_back({std::nullopt, Rational(2), Rational(1)});
  const auto t = transpose(s, 5);
  EXPECT_EQ(*t.notes[1].midi, 69);
  EXPECT_TRUE(t.notes[2].is_rest());
}

TEST(Frames, SpanFormula) {
  const auto spans = score_to_frames(legato({69}), 22050, 256);
  EXPECT_EQ(spans[0].length(), 43);

  const auto two = score_to_frames(legato({60, 62}), 22050, 256);
  EXPECT_EQ(two[0].start, 0);
  EXPECT_EQ(two[0].end, two[1].start);

  const auto slow = score_to_frames(legato({60, 62, 64}, Rational(2), 60), 22050, 256);
  const auto fast = score_to_frames(legato({60, 62, 64}, Rational(2), 120), 22050, 256);
  for (std::size_t i = 0; i < slow.size(); ++i)
    EXPECT_LE(std::abs(slow[i].length() - 2 * fast[i].length()), 2);
}

TEST(Frames, PitchConversions) {
  EXPECT_DOUBLE_EQ(midi_to_hz(69), 440.0);
  EXPECT_NEAR(midi_to_hz(57), 220.0, 1e-12);
  EXPECT_NEAR(hz_to_midi(midi_to_hz(61.3)), 61.3, 1e-12);
}
