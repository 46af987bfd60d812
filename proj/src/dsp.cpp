#include "zerosing/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <Eigen/Sparse>
#include <fftw3.h>

#include "zerosing/error.hpp"
#include "zerosing/random.hpp"

namespace zs {

namespace {

// FFTW's planner is not reentrant; execution on plan-owned buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    time_ = fftw_alloc_real(n);
    freq_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* time() { return time_; }
  std::complex<double>* freq() {
    return reinterpret_cast<std::complex<double>*>(freq_);
  }
  void forward() { fftw_execute(forward_); }
  /// Unnormalized: result is n times the true inverse.
  void inverse() { fftw_execute(inverse_); }
  int size() const { return n_; }

 private:
  int n_;
  double* time_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

Eigen::SparseMatrix<double> sparse_filterbank(const SpectralConfig& config) {
  RowMatrix dense = mel_filterbank(config);
  return dense.sparseView();
}

}  // namespace

void SpectralConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error("invalid-config", "spectral config: " + what);
  };
  if (hop <= 0 || win <= 0 || fft <= 0) fail("sizes must be positive");
  if (win > fft) fail("win must not exceed fft");
  if (hop > win) fail("hop must not exceed win");
  if (n_mels < 1) fail("n_mels must be at least 1");
  if (sample_rate_hz <= 0) fail("sample rate must be positive");
  if (fmin_hz < 0 || fmin_hz >= fmax_hz) fail("need 0 <= fmin < fmax");
  if (fmax_hz > sample_rate_hz / 2.0) fail("fmax above Nyquist");
}

std::size_t num_frames(std::size_t len_samples, const SpectralConfig& config) {
  return len_samples / static_cast<std::size_t>(config.hop) + 1;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(length);
  for (int n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  return w;
}

std::size_t reflect_index(std::int64_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::int64_t>(2 * (n - 1));
  std::int64_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::int64_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

ComplexSpectrogram stft(const AudioBuffer& audio, const SpectralConfig& config) {
  config.validate();
  if (audio.empty()) throw Error("too-short", "stft: empty audio");

  const std::size_t n = audio.size();
  const std::size_t frames = num_frames(n, config);
  const int half = config.fft / 2;
  const int win_offset = (config.fft - config.win) / 2;
  const auto window = hann_window(config.win);

  ComplexSpectrogram out{ComplexMatrix(frames, config.bins()), config};
  RealFft fft(config.fft);
  double* buf = fft.time();
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(buf, buf + config.fft, 0.0);
    const auto start = static_cast<std::int64_t>(t * config.hop) - half;
    for (int k = 0; k < config.win; ++k) {
      const std::int64_t pos = start + win_offset + k;
      buf[win_offset + k] = window[k] * audio.samples[reflect_index(pos, n)];
    }
    fft.forward();
    const auto* spec = fft.freq();
    for (int b = 0; b < config.bins(); ++b) out.frames(t, b) = spec[b];
  }
  return out;
}

AudioBuffer istft(const ComplexSpectrogram& spec) {
  const SpectralConfig& config = spec.config;
  const auto frames = static_cast<std::size_t>(spec.frames.rows());
  if (frames == 0) return AudioBuffer{{}, config.sample_rate_hz};
  const std::size_t out_len = (frames - 1) * config.hop;
  const int half = config.fft / 2;
  const int win_offset = (config.fft - config.win) / 2;
  const auto window = hann_window(config.win);

  std::vector<double> acc(out_len, 0.0);
  std::vector<double> norm(out_len, 0.0);
  RealFft fft(config.fft);
  for (std::size_t t = 0; t < frames; ++t) {
    auto* f = fft.freq();
    for (int b = 0; b < config.bins(); ++b) f[b] = spec.frames(t, b);
    fft.inverse();
    const double* buf = fft.time();
    const auto start = static_cast<std::int64_t>(t * config.hop) - half;
    for (int k = 0; k < config.win; ++k) {
      const std::int64_t pos = start + win_offset + k;
      if (pos < 0 || pos >= static_cast<std::int64_t>(out_len)) continue;
      acc[pos] += window[k] * buf[win_offset + k] / config.fft;
      norm[pos] += window[k] * window[k];
    }
  }
  AudioBuffer out{std::vector<double>(out_len), config.sample_rate_hz};
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = norm[i] > 1e-8 ? acc[i] / norm[i] : 0.0;
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

RowMatrix mel_filterbank(const SpectralConfig& config) {
  config.validate();
  const int bins = config.bins();
  const double mel_lo = hz_to_mel(config.fmin_hz);
  const double mel_hi = hz_to_mel(config.fmax_hz);
  std::vector<double> edges(config.n_mels + 2);
  for (int i = 0; i < config.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (config.n_mels + 1));

  RowMatrix fb = RowMatrix::Zero(config.n_mels, bins);
  for (int m = 0; m < config.n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f =
          static_cast<double>(b) * config.sample_rate_hz / config.fft;
      const double rise = (f - lo) / (center - lo);
      const double fall = (hi - f) / (hi - center);
      fb(m, b) = std::max(0.0, std::min(rise, fall));
    }
    if (fb.row(m).sum() <= 0.0)
      throw Error("invalid-config",
                  "mel filter " + std::to_string(m) +
                      " is empty; n_mels too large for fft resolution");
  }
  return fb;
}

MelSpectrogram mel_from_spectrogram(const ComplexSpectrogram& spec) {
  const auto fb = sparse_filterbank(spec.config);
  RowMatrix magnitude = spec.frames.cwiseAbs();
  RowMatrix mel = magnitude * fb.transpose();
  mel = mel.cwiseMax(kLogMelFloor).array().log().matrix();
  return MelSpectrogram{std::move(mel), spec.config};
}

MelSpectrogram mel_spectrogram(const AudioBuffer& audio,
                               const SpectralConfig& config) {
  return mel_from_spectrogram(stft(audio, config));
}

RowMatrix mel_to_linear_magnitude(const MelSpectrogram& mel, int nnls_iters) {
  const auto fb = sparse_filterbank(mel.config);
  const RowMatrix target = mel.frames.array().exp().matrix();
  // Lee-Seung multiplicative updates for min ||S Fb^T - M||^2, S >= 0.
  const RowMatrix numer = target * fb;
  RowMatrix s = numer;
  for (int it = 0; it < nnls_iters; ++it) {
    const RowMatrix recon = s * fb.transpose();
    const RowMatrix denom = recon * fb;
    s = (denom.array() > 1e-30)
            .select(s.array() * numer.array() / denom.array().max(1e-30), 0.0)
            .matrix();
  }
  return s;
}

AudioBuffer griffin_lim(const MelSpectrogram& mel, int iters,
                        std::uint64_t seed) {
  if (iters < 1) throw Error("invalid-argument", "griffin_lim: iters < 1");
  const RowMatrix magnitude = mel_to_linear_magnitude(mel);
  const auto frames = magnitude.rows();
  const auto bins = magnitude.cols();

  Rng rng(seed);
  std::uniform_real_distribution<double> phase_dist(-std::numbers::pi,
                                                    std::numbers::pi);
  ComplexSpectrogram current{ComplexMatrix(frames, bins), mel.config};
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index b = 0; b < bins; ++b)
      current.frames(t, b) = std::polar(magnitude(t, b), phase_dist(rng));

  if (frames < 2) return istft(current);

  // Fast Griffin-Lim: projection onto consistent spectrograms with momentum.
  constexpr double kMomentum = 0.99;
  ComplexMatrix previous_projection = ComplexMatrix::Zero(frames, bins);
  for (int it = 0; it < iters; ++it) {
    const ComplexSpectrogram rebuilt = stft(istft(current), mel.config);
    const ComplexMatrix accelerated =
        rebuilt.frames + kMomentum * (rebuilt.frames - previous_projection);
    previous_projection = rebuilt.frames;
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index b = 0; b < bins; ++b) {
        const auto z = accelerated(t, b);
        const double a = std::abs(z);
        current.frames(t, b) = a > 1e-12 ? magnitude(t, b) * (z / a)
                                         : std::complex<double>(magnitude(t, b));
      }
    }
  }
  return istft(current);
}

}  // namespace zs
