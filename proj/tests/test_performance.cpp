#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "scores.hpp"
#include "zerosing/error.hpp"
#include "zerosing/performance.hpp"

using namespace zs;
using zs::testing::legato;

namespace {

const StyleToken kPopNormal{Genre::Pop, Technique::Normal};
const StyleToken kPopVibrato{Genre::Pop, Technique::Vibrato};

PerformanceOptions still() {
  PerformanceOptions o;
  o.onset_sigma_s = 0.0;
  o.jitter_cents = 0.0;
  return o;
}

double cents(double a, double b) { return 1200.0 * std::log2(a / b); }

}  // namespace

TEST(StyleProfiles, DefaultsAndOverrides) {
  const auto t = StyleProfileTable::defaults();
  EXPECT_EQ(t[kPopNormal].vibrato_depth_cents, 0.0);
  EXPECT_EQ(t[kPopVibrato].vibrato_depth_cents, 50.0);
  EXPECT_EQ(t[(StyleToken{Genre::Opera, Technique::Vibrato})].vibrato_depth_cents, 120.0);
  const auto custom =
      StyleProfileTable::from_json({{"pop:vibrato", {{"vibrato_rate_hz", 4.0}}}});
  EXPECT_EQ(custom[kPopVibrato].vibrato_rate_hz, 4.0);
  EXPECT_EQ(custom[kPopVibrato].vibrato_depth_cents, 50.0);
  EXPECT_THROW(StyleProfileTable::from_json({{"pop:vibrato", {{"attack_s", -1.0}}}}), Error);
}

TEST(Timing, Deterministic) {
  const auto s = legato({60, 62, 64, 65});
  const auto a = generate_timing(s, kPopNormal, 77);
  const auto b = generate_timing(s, kPopNormal, 77);
  EXPECT_EQ(a.note_spans, b.note_spans);
  EXPECT_EQ(a.total_frames, b.total_frames);
}

TEST(Timing, ZeroSigmaIsNominal) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = zs::testing::random_score(rng);
    const auto t = generate_timing(s, kPopNormal, trial, still());
    EXPECT_EQ(t.note_spans, score_to_frames(s, kSampleRate, 256));
  }
}

TEST(Timing, SpansStayOrderedAndBounded) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = zs::testing::random_score(rng, 100);
    const auto nominal = score_to_frames(s, kSampleRate, 256);
    const auto t = generate_timing(s, kPopNormal, 1000 + trial);
    ASSERT_EQ(t.note_spans.size(), nominal.size());
    EXPECT_EQ(t.total_frames, nominal.back().end);
    EXPECT_GE(t.note_spans.front().start, 0);
    for (std::size_t i = 0; i < t.note_spans.size(); ++i) {
      const auto& span = t.note_spans[i];
      if (nominal[i].length() > 0) {
        EXPECT_GE(4 * span.length(), nominal[i].length());
        EXPECT_LE(span.length(), 2 * nominal[i].length());
      }
      for (std::size_t j = i + 1; j < t.note_spans.size(); ++j)
        EXPECT_LE(span.end, t.note_spans[j].start);
    }
  }
}

TEST(F0Curve, NormalNoteIsConstant) {
  const auto s = legato({69}, Rational(2));
  const auto t = generate_timing(s, kPopNormal, 1, still());
  const auto f0 = generate_f0_curve(s, t, kPopNormal, 1, StyleProfileTable::defaults(), still());
  ASSERT_EQ(static_cast<int>(f0.size()), t.total_frames);
  for (std::size_t i = 0; i < f0.size(); ++i) {
    EXPECT_TRUE(f0.voiced[i]);
    EXPECT_NEAR(f0.values_hz[i], 440.0, 1e-9);
  }
}

TEST(F0Curve, VibratoDepthBound) {
  const auto s = legato({69}, Rational(3));
  const auto t = generate_timing(s, kPopVibrato, 1, still());
  const auto f0 = generate_f0_curve(s, t, kPopVibrato, 1, StyleProfileTable::defaults(), still());
  const double lo = 440.0 * std::pow(2.0, -50.0 / 1200.0);
  const double hi = 440.0 * std::pow(2.0, 50.0 / 1200.0);
  double min_v = 1e9, max_v = 0;
  for (double v : f0.values_hz) {
    EXPECT_GE(v, lo - 1e-9);
    EXPECT_LE(v, hi + 1e-9);
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  EXPECT_LT(cents(min_v, 440.0), -45.0);
  EXPECT_GT(cents(max_v, 440.0), 45.0);
}

TEST(F0Curve, JitterBounded) {
  const auto s = legato({60, 67}, Rational(4));
  PerformanceOptions o;
  o.onset_sigma_s = 0.0;
  const auto t = generate_timing(s, kPopNormal, 3, o);
  const auto f0 = generate_f0_curve(s, t, kPopNormal, 3, StyleProfileTable::defaults(), o);
  // Away from the glide, only jitter remains.
  for (int f = 0; f < t.note_spans[0].end - 10; ++f)
    EXPECT_LE(std::abs(cents(f0.values_hz[f], midi_to_hz(60))), 5.0 + 1e-9);
}

TEST(F0Curve, PortamentoIsMonotoneGlide) {
  const auto s = legato({60, 64});
  const auto t = generate_timing(s, kPopNormal, 1, still());
  const auto f0 = generate_f0_curve(s, t, kPopNormal, 1, StyleProfileTable::defaults(), still());
  const int boundary = t.note_spans[1].start;
  const int half_width = static_cast<int>(std::ceil(0.04 * kSampleRate / 256));
  for (int f = boundary - half_width - 1; f < boundary + half_width + 1; ++f)
    EXPECT_GE(f0.values_hz[f + 1], f0.values_hz[f] - 1e-12);
  EXPECT_GT(f0.values_hz[boundary - 1], midi_to_hz(60) + 1.0);
  EXPECT_LT(f0.values_hz[boundary], midi_to_hz(64) - 1.0);
  EXPECT_LT(std::abs(cents(f0.values_hz[boundary - half_width - 1], midi_to_hz(60))), 2.0);
  EXPECT_LT(std::abs(cents(f0.values_hz[boundary + half_width + 1], midi_to_hz(64))), 2.0);
}

TEST(F0Curve, RestsAreUnvoiced) {
  auto s = legato({60});
  s.notes.push_back({std::nullopt, Rational(1), Rational(1)});
  const auto t = generate_timing(s, kPopNormal, 1, still());
  const auto f0 = generate_f0_curve(s, t, kPopNormal, 1);
  for (int f = t.note_spans[1].start; f < t.note_spans[1].end; ++f) {
    EXPECT_FALSE(f0.voiced[f]);
    EXPECT_EQ(f0.values_hz[f], 0.0);
  }
}

TEST(Amplitude, RestOnlyIsSilent) {
  MusicScore s;
  s.notes.push_back({std::nullopt, Rational(0), Rational(2)});
  PerformanceTiming t{score_to_frames(s, kSampleRate, 256), 0, 0};
  t.total_frames = t.note_spans.back().end;
  const auto env = generate_amplitude(s, t, kPopNormal, 4);
  for (double v : env.values) EXPECT_EQ(v, 0.0);
}

TEST(Amplitude, LongNotePlateau) {
  const auto s = legato({62}, Rational(4));
  const auto t = generate_timing(s, kPopNormal, 8);
  const auto env = generate_amplitude(s, t, kPopNormal, 8);
  const double peak = *std::max_element(env.values.begin(), env.values.end());
  EXPECT_GE(peak, 0.6);
  EXPECT_LE(peak, 0.8);
  const auto top = std::max_element(env.values.begin(), env.values.end()) - env.values.begin();
  for (long f = 1; f <= top; ++f) EXPECT_GE(env.values[f], env.values[f - 1]);
  for (std::size_t f = top + 1; f < env.values.size(); ++f)
    EXPECT_LE(env.values[f], env.values[f - 1]);
  EXPECT_EQ(env.values, generate_amplitude(s, t, kPopNormal, 8).values);
}

TEST(Lyrics, AlignmentCoversEveryFrame) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = zs::testing::random_score(rng);
    const auto t = generate_timing(s, kPopNormal, trial);
    const auto a = align_lyrics_to_timing(s, t);
    ASSERT_NO_THROW(validate_alignment(a, &s));
    int cursor = 0;
    for (const auto& p : a.phonemes) {
      EXPECT_EQ(p.start_frame, cursor);
      cursor = p.end_frame;
    }
    EXPECT_EQ(cursor, t.total_frames);
  }
}

TEST(Lyrics, VowelsGetMoreFrames) {
  MusicScore s = legato({60}, Rational(2));
  s.lyrics = {{phoneme_id("l"), 0}, {phoneme_id("aa"), 0}};
  const auto t = generate_timing(s, kPopNormal, 1, still());
  const auto a = align_lyrics_to_timing(s, t);
  ASSERT_EQ(a.phonemes.size(), 2u);
  const int consonant = a.phonemes[0].end_frame - a.phonemes[0].start_frame;
  const int vowel = a.phonemes[1].end_frame - a.phonemes[1].start_frame;
  EXPECT_NEAR(static_cast<double>(vowel) / consonant, 4.0, 0.3);
}

TEST(Lyrics, MissingLyricsRejected) {
  MusicScore s = legato({60});
  s.lyrics.clear();
  try {
    align_lyrics_to_timing(s, generate_timing(s, kPopNormal, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "missing-lyrics");
  }
}
