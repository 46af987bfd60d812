#pragma once

#include <filesystem>
#include <vector>

#include "zerosing/dsp.hpp"

namespace zs {

enum class DomainMode { Singing, Speech };

/// Per-domain tracker settings. Speech uses a narrower band and a longer
/// median filter to suppress octave jumps and jitter.
struct DomainParams {
  double f0_min_hz;
  double f0_max_hz;
  int median_smooth_frames;
};

DomainParams domain_params(DomainMode mode);
const char* to_string(DomainMode mode);
DomainMode domain_from_string(const std::string& s);

struct F0Curve {
  std::vector<double> values_hz;  // 0 where unvoiced
  std::vector<bool> voiced;
  int hop = 256;

  std::size_t size() const { return values_hz.size(); }
  std::size_t voiced_count() const;
};

struct AmplitudeEnvelope {
  std::vector<double> values;
  int hop = 256;

  std::size_t size() const { return values.size(); }
};

struct F0Stats {
  double median_hz;
  double p05_hz;
  double p95_hz;
};

inline constexpr double kYinThreshold = 0.15;
/// Pre-filter cutoff as a multiple of the domain's F0 ceiling.
inline constexpr double kYinLowpassRatio = 1.25;
inline constexpr int kYinLowpassSections = 3;

/// YIN-style tracker on a zero-phase low-passed copy: cumulative-mean-normalized
/// difference, absolute threshold, parabolic refinement, then median smoothing
/// within voiced runs.
F0Curve extract_f0(const AudioBuffer& audio, DomainMode mode,
                   const SpectralConfig& config = {});

/// RMS of each Hann-weighted analysis frame, framed exactly like stft().
AmplitudeEnvelope extract_amplitude(const AudioBuffer& audio, DomainMode mode,
                                    const SpectralConfig& config = {});

/// Statistics over voiced frames; throws "no-voiced-reference" if none.
F0Stats f0_statistics(const F0Curve& curve);

/// Linear-interpolated percentile (0..100) of a nonempty sample.
double percentile(std::vector<double> values, double pct);

/// Debug dump: frame_index,f0_hz,voiced,rms.
void write_feature_csv(const std::filesystem::path& path, const F0Curve& f0,
                       const AmplitudeEnvelope& amp);

}  // namespace zs
