#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "signals.hpp"
#include "zerosing/error.hpp"
#include "zerosing/features.hpp"
#include "zerosing/random.hpp"

using namespace zs;
using zs::testing::sine;

namespace {

double cents(double a, double b) { return 1200.0 * std::log2(a / b); }

// Fraction of interior frames voiced within `tol` cents of `hz`.
double accurate_fraction(const F0Curve& f0, double hz, double tol) {
  const std::size_t margin = 4;
  std::size_t good = 0, total = 0;
  for (std::size_t t = margin; t + margin < f0.size(); ++t) {
    ++total;
    if (f0.voiced[t] && std::abs(cents(f0.values_hz[t], hz)) < tol) ++good;
  }
  return static_cast<double>(good) / total;
}

}  // namespace

TEST(Domain, Params) {
  EXPECT_EQ(domain_params(DomainMode::Singing).f0_min_hz, 60.0);
  EXPECT_EQ(domain_params(DomainMode::Singing).f0_max_hz, 1400.0);
  EXPECT_EQ(domain_params(DomainMode::Speech).f0_max_hz, 500.0);
  EXPECT_EQ(domain_from_string("speech"), DomainMode::Speech);
  EXPECT_STREQ(to_string(DomainMode::Singing), "singing");
  EXPECT_THROW(domain_from_string("rap"), Error);
}

TEST(Yin, SineAccuracySinging) {
  for (double hz : {110.0, 220.0, 440.0, 880.0}) {
    const auto f0 = extract_f0(sine(hz, 1.0, 0.5), DomainMode::Singing);
    EXPECT_EQ(f0.size(), 87u);
    EXPECT_GE(accurate_fraction(f0, hz, 10.0), 0.95) << hz;
  }
}

TEST(Yin, A4WithinTwoHertz) {
  const auto f0 = extract_f0(sine(440.0, 1.0), DomainMode::Singing);
  std::size_t good = 0, total = 0;
  for (std::size_t t = 4; t + 4 < f0.size(); ++t, ++total)
    good += f0.voiced[t] && f0.values_hz[t] >= 438.0 && f0.values_hz[t] <= 442.0;
  EXPECT_GE(static_cast<double>(good) / total, 0.95);
}

TEST(Yin, SineAccuracySpeech) {
  for (double hz : {110.0, 220.0}) {
    const auto f0 = extract_f0(sine(hz, 1.0, 0.5), DomainMode::Speech);
    EXPECT_GE(accurate_fraction(f0, hz, 10.0), 0.95) << hz;
  }
}

TEST(Yin, SilenceUnvoiced) {
  for (auto mode : {DomainMode::Singing, DomainMode::Speech}) {
    const auto f0 = extract_f0(zs::testing::silence(1.0), mode);
    EXPECT_EQ(f0.voiced_count(), 0u);
    for (double v : f0.values_hz) EXPECT_EQ(v, 0.0);
  }
}

TEST(Yin, NoiseMostlyUnvoiced) {
  const auto f0 = extract_f0(zs::testing::white_noise(22050, 2), DomainMode::Singing);
  EXPECT_LT(static_cast<double>(f0.voiced_count()) / f0.size(), 0.2);
}

TEST(Yin, VibratoStaysInBand) {
  const auto f0 = extract_f0(zs::testing::vibrato_tone(220.0, 10.0, 6.0, 2.0),
                             DomainMode::Singing);
  double lo = 1e9, hi = 0.0;
  for (std::size_t t = 4; t + 4 < f0.size(); ++t) {
    ASSERT_TRUE(f0.voiced[t]);
    lo = std::min(lo, f0.values_hz[t]);
    hi = std::max(hi, f0.values_hz[t]);
  }
  EXPECT_GE(lo, 208.0);
  EXPECT_LE(hi, 232.0);
  // The modulation is actually tracked, not smoothed away.
  EXPECT_LT(lo, 216.0);
  EXPECT_GT(hi, 224.0);
  const auto stats = f0_statistics(f0);
  EXPECT_GE(stats.median_hz, 218.0);
  EXPECT_LE(stats.median_hz, 222.0);
}

TEST(Yin, OutOfBandIsUnvoiced) {
  // 1200 Hz lies above the speech band.
  const auto f0 = extract_f0(sine(1200.0, 0.5, 0.5), DomainMode::Speech);
  for (std::size_t t = 0; t < f0.size(); ++t)
    if (f0.voiced[t]) {
      EXPECT_GE(f0.values_hz[t], 50.0);
      EXPECT_LE(f0.values_hz[t], 500.0);
    }
}

TEST(Yin, ShortInputsStillFramed) {
  AudioBuffer a = sine(220.0, 0.05);
  const auto f0 = extract_f0(a, DomainMode::Singing);
  EXPECT_EQ(f0.size(), num_frames(a.size(), SpectralConfig{}));
}

TEST(Amplitude, UnitSineClosedForm) {
  const auto amp = extract_amplitude(sine(440.0, 1.0), DomainMode::Singing);
  const auto w = hann_window(1024);
  double mean_sq = 0.0;
  for (double v : w) mean_sq += v * v;
  mean_sq /= w.size();
  const double expected = std::sqrt(mean_sq) / std::sqrt(2.0);
  for (std::size_t t = 3; t + 3 < amp.size(); ++t)
    EXPECT_NEAR(amp.values[t], expected, 0.02 * expected);
}

TEST(Amplitude, SilenceIsZero) {
  const auto amp = extract_amplitude(zs::testing::silence(0.5), DomainMode::Speech);
  for (double v : amp.values) EXPECT_EQ(v, 0.0);
}

TEST(Amplitude, RampIsMonotoneAfterSmoothing) {
  auto a = sine(330.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    a.samples[i] *= static_cast<double>(i) / (a.size() - 1);
  const auto amp = extract_amplitude(a, DomainMode::Singing);
  std::vector<double> smooth;
  for (std::size_t t = 1; t + 1 < amp.size(); ++t)
    smooth.push_back((amp.values[t - 1] + amp.values[t] + amp.values[t + 1]) / 3.0);
  // Reflect padding makes the last couple of frames fold back.
  for (std::size_t i = 1; i + 2 < smooth.size(); ++i) EXPECT_GE(smooth[i], smooth[i - 1] - 1e-12);
}

TEST(F0Stats, Medians) {
  F0Curve c;
  c.values_hz.assign(10, 220.0);
  c.voiced.assign(10, true);
  EXPECT_DOUBLE_EQ(f0_statistics(c).median_hz, 220.0);

  c.values_hz = {200, 0, 220, 240, 0};
  c.voiced = {true, false, true, true, false};
  EXPECT_DOUBLE_EQ(f0_statistics(c).median_hz, 220.0);

  c.voiced.assign(5, false);
  try {
    f0_statistics(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "no-voiced-reference");
  }
}

TEST(F0Stats, PercentileMatchesSortedInterpolation) {
  zs::Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial % 17);
    for (auto& x : v) x = 100.0 * uniform01(rng);
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double pct = 100.0 * uniform01(rng);
    const double pos = pct / 100.0 * (s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double expected = s[lo] + (pos - lo) * (s[hi] - s[lo]);
    EXPECT_NEAR(percentile(v, pct), expected, 1e-9);
  }
}
