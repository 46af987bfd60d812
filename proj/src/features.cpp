#include "zerosing/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "zerosing/error.hpp"

namespace zs {

DomainParams domain_params(DomainMode mode) {
  switch (mode) {
    case DomainMode::Singing:
      return {60.0, 1400.0, 5};
    case DomainMode::Speech:
      return {50.0, 500.0, 9};
  }
  throw Error("invalid-argument", "unknown domain mode");
}

const char* to_string(DomainMode mode) {
  return mode == DomainMode::Singing ? "singing" : "speech";
}

DomainMode domain_from_string(const std::string& s) {
  if (s == "singing") return DomainMode::Singing;
  if (s == "speech") return DomainMode::Speech;
  throw Error("invalid-argument", "unknown domain '" + s + "'");
}

std::size_t F0Curve::voiced_count() const {
  return static_cast<std::size_t>(std::count(voiced.begin(), voiced.end(), true));
}

namespace {

void require_length(const AudioBuffer& audio, const SpectralConfig& config) {
  config.validate();
  if (audio.size() < static_cast<std::size_t>(config.win))
    throw Error("too-short", "audio shorter than one analysis window (" +
                                 std::to_string(config.win) + " samples)");
}

// Median over each voiced run, window clipped at run boundaries.
std::vector<double> smooth_voiced_runs(const std::vector<double>& values,
                                       const std::vector<bool>& voiced,
                                       int window) {
  std::vector<double> out = values;
  const int half = window / 2;
  const int n = static_cast<int>(values.size());
  int run_start = 0;
  while (run_start < n) {
    if (!voiced[run_start]) {
      ++run_start;
      continue;
    }
    int run_end = run_start;
    while (run_end < n && voiced[run_end]) ++run_end;
    std::vector<double> scratch;
    for (int i = run_start; i < run_end; ++i) {
      const int lo = std::max(run_start, i - half);
      const int hi = std::min(run_end, i + half + 1);
      scratch.assign(values.begin() + lo, values.begin() + hi);
      std::nth_element(scratch.begin(), scratch.begin() + scratch.size() / 2,
                       scratch.end());
      double med = scratch[scratch.size() / 2];
      if (scratch.size() % 2 == 0) {
        const double lower =
            *std::max_element(scratch.begin(), scratch.begin() + scratch.size() / 2);
        med = 0.5 * (med + lower);
      }
      out[i] = med;
    }
    run_start = run_end;
  }
  return out;
}

// Forward-backward RBJ low-pass (Q = 1/sqrt 2), zero phase.
std::vector<double> lowpass_zero_phase(const std::vector<double>& x, double cutoff_hz,
                                       double sr) {
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / sr;
  const double alpha = std::sin(w0) / std::sqrt(2.0);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 - cw) / 2.0 / a0, b1 = (1.0 - cw) / a0, b2 = b0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> y(x.size());
  auto pass = [&](auto begin, auto end, auto out) {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (auto it = begin; it != end; ++it, ++out) {
      const double v = b0 * *it + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1;
      x1 = *it;
      y2 = y1;
      y1 = v;
      *out = v;
    }
  };
  pass(x.begin(), x.end(), y.begin());
  std::vector<double> fwd = y;
  pass(fwd.rbegin(), fwd.rend(), y.rbegin());
  return y;
}

}  // namespace

F0Curve extract_f0(const AudioBuffer& audio, DomainMode mode,
                   const SpectralConfig& config) {
  require_length(audio, config);
  const DomainParams params = domain_params(mode);
  const double sr = audio.sample_rate_hz;
  const int integration = config.win / 2;
  const int tau_min = std::max(2, static_cast<int>(std::floor(sr / params.f0_max_hz)));
  const int tau_max = static_cast<int>(std::ceil(sr / params.f0_min_hz));
  const int segment = integration + tau_max + 2;
  std::vector<double> filtered = audio.samples;
  for (int k = 0; k < kYinLowpassSections; ++k)
    filtered = lowpass_zero_phase(filtered, kYinLowpassRatio * params.f0_max_hz, sr);

  const std::size_t n = audio.size();
  const std::size_t frames = num_frames(n, config);
  F0Curve curve{std::vector<double>(frames, 0.0), std::vector<bool>(frames, false),
                config.hop};

  std::vector<double> x(segment);
  std::vector<double> diff(tau_max + 2);
  std::vector<double> cmnd(tau_max + 2);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::int64_t>(t * config.hop) - segment / 2;
    double energy = 0.0;
    for (int j = 0; j < segment; ++j) {
      x[j] = filtered[reflect_index(start + j, n)];
      energy += x[j] * x[j];
    }
    if (energy < 1e-10 * segment) continue;

    diff[0] = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      double acc = 0.0;
      for (int j = 0; j < integration; ++j) {
        const double d = x[j] - x[j + tau];
        acc += d * d;
      }
      diff[tau] = acc;
    }
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max + 1; ++tau) {
      running += diff[tau];
      cmnd[tau] = running > 0.0 ? diff[tau] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < kYinThreshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) continue;

    double refined = best;
    if (best > 1 && best < tau_max + 1) {
      const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
      const double denom = a - 2.0 * b + c;
      if (denom > 0.0) refined = best + 0.5 * (a - c) / denom;
    }
    const double f0 = sr / refined;
    if (f0 < params.f0_min_hz || f0 > params.f0_max_hz) continue;
    curve.values_hz[t] = f0;
    curve.voiced[t] = true;
  }

  curve.values_hz =
      smooth_voiced_runs(curve.values_hz, curve.voiced, params.median_smooth_frames);
  return curve;
}

AmplitudeEnvelope extract_amplitude(const AudioBuffer& audio, DomainMode /*mode*/,
                                    const SpectralConfig& config) {
  require_length(audio, config);
  const std::size_t n = audio.size();
  const std::size_t frames = num_frames(n, config);
  const auto window = hann_window(config.win);
  const int half = config.fft / 2;
  const int win_offset = (config.fft - config.win) / 2;

  AmplitudeEnvelope env{std::vector<double>(frames, 0.0), config.hop};
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::int64_t>(t * config.hop) - half + win_offset;
    double acc = 0.0;
    for (int k = 0; k < config.win; ++k) {
      const double v = window[k] * audio.samples[reflect_index(start + k, n)];
      acc += v * v;
    }
    env.values[t] = std::sqrt(acc / config.win);
  }
  return env;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw Error("invalid-argument", "percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

F0Stats f0_statistics(const F0Curve& curve) {
  std::vector<double> voiced;
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve.voiced[i]) voiced.push_back(curve.values_hz[i]);
  if (voiced.empty()) throw Error("no-voiced-reference", "no voiced reference frames");
  return {percentile(voiced, 50.0), percentile(voiced, 5.0), percentile(voiced, 95.0)};
}

void write_feature_csv(const std::filesystem::path& path, const F0Curve& f0,
                       const AmplitudeEnvelope& amp) {
  if (f0.size() != amp.size())
    throw Error("shape-mismatch", "f0 and amplitude lengths differ");
  std::ofstream out(path);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  out << "frame_index,f0_hz,voiced,rms\n";
  out.precision(9);
  for (std::size_t i = 0; i < f0.size(); ++i)
    out << i << ',' << f0.values_hz[i] << ',' << (f0.voiced[i] ? 1 : 0) << ','
        << amp.values[i] << '\n';
}

}  // namespace zs
