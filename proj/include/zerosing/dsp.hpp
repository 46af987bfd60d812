#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace zs {

inline constexpr int kSampleRate = 22050;
inline constexpr double kLogMelFloor = 1e-5;

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

struct SpectralConfig {
  int hop = 256;
  int win = 1024;
  int fft = 1024;
  int n_mels = 80;
  double fmin_hz = 0.0;
  double fmax_hz = 11025.0;
  int sample_rate_hz = kSampleRate;

  int bins() const { return fft / 2 + 1; }
  /// Throws zs::Error("invalid-config") when any invariant fails.
  void validate() const;
  bool operator==(const SpectralConfig&) const = default;
};

using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                    Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Frames x (fft/2+1).
struct ComplexSpectrogram {
  ComplexMatrix frames;
  SpectralConfig config;
};

/// Frames x n_mels natural-log mel magnitudes.
struct MelSpectrogram {
  RowMatrix frames;
  SpectralConfig config;

  Eigen::Index num_frames() const { return frames.rows(); }
};

/// Center-padded framing: floor(len / hop) + 1.
std::size_t num_frames(std::size_t len_samples, const SpectralConfig& config);

/// Periodic Hann window.
std::vector<double> hann_window(int length);

/// Mirror index into [0, n) with reflect (no edge repeat) semantics.
std::size_t reflect_index(std::int64_t i, std::size_t n);

ComplexSpectrogram stft(const AudioBuffer& audio, const SpectralConfig& config);

/// Inverse STFT by weighted overlap-add. Output length (T-1)*hop.
AudioBuffer istft(const ComplexSpectrogram& spec);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x (fft/2+1) triangular filterbank on the HTK mel scale.
RowMatrix mel_filterbank(const SpectralConfig& config);

/// log(max(filterbank * |X|, floor)) for each frame.
MelSpectrogram mel_from_spectrogram(const ComplexSpectrogram& spec);
MelSpectrogram mel_spectrogram(const AudioBuffer& audio,
                               const SpectralConfig& config);

/// Nonnegative least-squares estimate of linear magnitudes from a mel.
RowMatrix mel_to_linear_magnitude(const MelSpectrogram& mel,
                                  int nnls_iters = 100);

/// Griffin-Lim phase reconstruction from a log-mel spectrogram.
AudioBuffer griffin_lim(const MelSpectrogram& mel, int iters,
                        std::uint64_t seed);

}  // namespace zs
