#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "signals.hpp"
#include "zerosing/embeddings.hpp"
#include "zerosing/error.hpp"

using namespace zs;
using zs::testing::Formants;
using zs::testing::vowel_glide;

namespace {

const Formants kA{750, 1200, 2600};
const Formants kI{300, 2300, 3000};
const Formants kU{350, 800, 2400};

double cosine(const TimbreEmbedding& a, const TimbreEmbedding& b) {
  return cosine_similarity(a.vector, b.vector);
}

double mean_frame_cosine(const ContentEmbeddingSequence& a, const ContentEmbeddingSequence& b) {
  const auto rows = std::min(a.frames.rows(), b.frames.rows());
  double acc = 0.0;
  for (Eigen::Index t = 0; t < rows; ++t) {
    const Eigen::VectorXd x = a.frames.row(t), y = b.frames.row(t);
    acc += x.dot(y) / (x.norm() * y.norm());
  }
  return acc / rows;
}

AudioBuffer concat(std::initializer_list<AudioBuffer> parts) {
  AudioBuffer out;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

// A short "utterance" for a speaker defined by spectral tilt.
AudioBuffer utterance(double tilt, double f0, Formants a, Formants b) {
  return concat({vowel_glide(f0, a, b, 0.8, tilt), vowel_glide(f0 * 1.12, b, a, 0.8, tilt)});
}

// Longer utterance visiting every vowel in the given order.
AudioBuffer sentence(double tilt, double f0, std::initializer_list<Formants> vowels) {
  AudioBuffer out;
  const Formants* prev = nullptr;
  double pitch = f0;
  for (const auto& v : vowels) {
    const auto part = vowel_glide(pitch, prev ? *prev : v, v, 0.5, tilt);
    out.samples.insert(out.samples.end(), part.samples.begin(), part.samples.end());
    prev = &v;
    pitch *= 1.06;
  }
  return out;
}

}  // namespace

TEST(Cosine, Basics) {
  const std::vector<double> a{1, 0, 0}, b{0, 2, 0}, c{-3, 0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), -1.0);
  EXPECT_THROW(cosine_similarity(a, std::vector<double>{1.0}), Error);
}

TEST(Timbre, UnitNormAndDeterministic) {
  const auto audio = utterance(-3.0, 180, kA, kI);
  const auto e1 = timbre_embed(audio);
  const auto e2 = timbre_embed(audio);
  EXPECT_EQ(e1.vector, e2.vector);
  ASSERT_EQ(e1.vector.size(), static_cast<std::size_t>(kTimbreDim));
  double norm = 0.0;
  for (double v : e1.vector) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(Timbre, TooShortRejected) {
  try {
    timbre_embed(zs::testing::sine(220, 0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "too-short");
  }
}

TEST(Timbre, HistogramMassIsFixed) {
  const auto stats = timbre_statistics(zs::testing::vibrato_tone(220, 15, 5, 1.5));
  double sum = 0.0;
  for (int b = 0; b < kF0HistogramBins; ++b) sum += stats[2 * 80 + b];
  EXPECT_NEAR(sum, kF0HistogramWeight, 1e-12);
}

TEST(Timbre, SilenceIsFlat) {
  const auto stats = timbre_statistics(zs::testing::silence(1.2));
  for (int b = 0; b < 192; ++b) EXPECT_NEAR(stats[b], 0.0, 1e-9);
}

TEST(Timbre, LevelInvariant) {
  const auto audio = utterance(-3.0, 180, kA, kI);
  AudioBuffer quiet = audio;
  for (double& s : quiet.samples) s *= 0.25;
  EXPECT_GT(cosine(timbre_embed(audio), timbre_embed(quiet)), 0.999);
}

TEST(Timbre, NearlyShiftInvariant) {
  const auto audio = utterance(0.0, 200, kA, kU);
  AudioBuffer shifted = audio;
  const auto shift = static_cast<std::ptrdiff_t>(0.1 * kSampleRate);
  std::rotate(shifted.samples.begin(), shifted.samples.begin() + shift, shifted.samples.end());
  EXPECT_GT(cosine(timbre_embed(audio), timbre_embed(shifted)), 0.99);
}

TEST(Timbre, SeparatesTiltedSpeakers) {
  // Same vowel inventory, different order and register.
  const auto a1 = timbre_embed(sentence(+6.0, 190, {kA, kI, kU, kA, kU, kI}));
  const auto a2 = timbre_embed(sentence(+6.0, 170, {kI, kA, kU, kI, kA, kU}));
  const auto b1 = timbre_embed(sentence(-6.0, 190, {kA, kI, kU, kA, kU, kI}));
  const auto b2 = timbre_embed(sentence(-6.0, 170, {kI, kA, kU, kI, kA, kU}));
  EXPECT_GT(cosine(a1, a2), 0.95);
  EXPECT_GT(cosine(b1, b2), 0.95);
  EXPECT_LT(cosine(a1, b1), 0.9);
  EXPECT_LT(cosine(a2, b2), 0.9);
}

TEST(Content, ShapeAndSource) {
  const auto audio = utterance(0.0, 200, kA, kI);
  const auto c = content_encode_local(audio);
  EXPECT_EQ(c.frames.rows(), static_cast<Eigen::Index>(num_frames(audio.size(), SpectralConfig{})));
  EXPECT_EQ(c.frames.cols(), kContentDim);
  EXPECT_EQ(c.source, ContentSource::LocalAudio);
}

TEST(Content, GainInvariantExactly) {
  const auto audio = utterance(0.0, 200, kA, kI);
  AudioBuffer louder = audio;
  for (double& s : louder.samples) s *= 2.0;
  const auto a = content_encode_local(audio);
  const auto b = content_encode_local(louder);
  EXPECT_EQ(a.frames, b.frames);
}

TEST(Content, RobustToGlobalTilt) {
  const auto flat = content_encode_local(utterance(0.0, 200, kA, kI));
  const auto tilted = content_encode_local(utterance(3.0, 200, kA, kI));
  EXPECT_GT(mean_frame_cosine(flat, tilted), 0.95);
}

TEST(Content, StationaryVowelGivesConstantFrames) {
  // Period of 128 samples divides the hop, so interior frames see identical
  // windows.
  const auto audio = vowel_glide(kSampleRate / 128.0, kA, kA, 1.0);
  const auto c = content_encode_local(audio);
  for (Eigen::Index t = 4; t + 4 < c.frames.rows(); ++t)
    EXPECT_LT((c.frames.row(t) - c.frames.row(4)).norm(), 1e-3);
}

TEST(Content, TracksVowelChanges) {
  const auto audio = concat({vowel_glide(200, kA, kA, 0.6), vowel_glide(200, kI, kI, 0.6)});
  const auto c = content_encode_local(audio);
  const Eigen::Index mid = c.frames.rows() / 2;
  EXPECT_GT((c.frames.row(10) - c.frames.row(mid + 20)).norm(),
            10.0 * (c.frames.row(10) - c.frames.row(14)).norm());
}

TEST(Content, TooShortRejected) {
  EXPECT_THROW(content_encode_local(zs::testing::sine(200, 0.01)), Error);
}

TEST(LyricFrames, CoverageAndPositions) {
  AlignedLyrics lyrics;
  lyrics.phonemes = {{phoneme_id("l"), 0, 0, 2}, {phoneme_id("aa"), 0, 2, 7}};
  const auto f = lyric_frames(lyrics, 7);
  EXPECT_EQ(f.phone_ids[0], phoneme_id("l"));
  EXPECT_EQ(f.phone_ids[6], phoneme_id("aa"));
  EXPECT_DOUBLE_EQ(f.positions[2], 0.0);
  EXPECT_DOUBLE_EQ(f.positions[6], 1.0);
  EXPECT_DOUBLE_EQ(f.positions[4], 0.5);
  try {
    lyric_frames(lyrics, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "uncovered-frame");
  }
}

class LyricEncoder : public ::testing::Test {
 protected:
  std::shared_ptr<const ParamLayout> layout = std::make_shared<const ParamLayout>(ModelConfig{});
  Params<float> params = init_params<float>(layout, 3);
  AlignedLyrics lyrics{{{phoneme_id("m"), 0, 0, 3}, {phoneme_id("aa"), 0, 3, 12}}};
  PerformanceTiming timing{{{0, 12}}, 12, 0};
};

TEST_F(LyricEncoder, ZeroParamsGiveZeroFrames) {
  Params<float> zero(layout);
  const auto c = content_encode_lyrics(lyrics, timing, zero);
  EXPECT_EQ(c.frames.rows(), 12);
  EXPECT_EQ(c.frames.cols(), kContentDim);
  EXPECT_EQ(c.frames.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(c.source, ContentSource::Lyrics);
}

TEST_F(LyricEncoder, LeakySlopeOnNegativePreactivation) {
  Params<float> p(layout);
  p.mat(layout->enc_b2).setConstant(-2.0f);
  p.mat(layout->enc_b2)(0, 0) = 3.0f;
  const auto c = content_encode_lyrics(lyrics, timing, p);
  EXPECT_FLOAT_EQ(static_cast<float>(c.frames(5, 1)), -0.2f);
  EXPECT_FLOAT_EQ(static_cast<float>(c.frames(5, 0)), 3.0f);
}

TEST_F(LyricEncoder, PositionIsTheOnlyWithinPhonemeDifference) {
  const auto c = content_encode_lyrics(lyrics, timing, params);
  EXPECT_GT((c.frames.row(3) - c.frames.row(11)).norm(), 0.0);
  Params<float> blind = params;
  blind.mat(layout->enc_w1).col(ModelConfig{}.phone_embed).setZero();
  const auto d = content_encode_lyrics(lyrics, timing, blind);
  EXPECT_EQ(d.frames.row(3), d.frames.row(11));
  EXPECT_NE(d.frames.row(0), d.frames.row(3));
}

TEST_F(LyricEncoder, StyleLookup) {
  const StyleToken pop{Genre::Pop, Technique::Normal};
  EXPECT_EQ(style_embed(pop, params), style_embed(pop, params));
  for (int i = 0; i < kNumStyles; ++i)
    for (int j = i + 1; j < kNumStyles; ++j)
      EXPECT_NE(style_embed(StyleToken::from_index(i), params),
                style_embed(StyleToken::from_index(j), params));
  Params<float> updated = params;
  updated.mat(layout->style_table)(2, pop.index()) += 0.5f;
  EXPECT_FLOAT_EQ(style_embed(pop, updated)[2], style_embed(pop, params)[2] + 0.5f);
}

TEST(EmbeddingDump, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "zs_embedding_dump.bin";
  const std::vector<std::vector<float>> rows{{1.0f, -2.5f, 3.25f}, {0.0f, 1e-8f, -7.0f}};
  write_embedding_dump(path, rows);
  EXPECT_EQ(read_embedding_dump(path), rows);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 6u * 4u);
  std::filesystem::remove(path);
}
