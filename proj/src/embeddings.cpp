#include "zerosing/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "zerosing/error.hpp"
#include "zerosing/features.hpp"
#include "zerosing/random.hpp"

namespace zs {

namespace {

constexpr std::uint64_t kTimbreProjectionSeed = 0x7a5e11c0ffee0192ULL;
constexpr std::uint64_t kContentProjectionSeed = 0x5eedc0de00000064ULL;
constexpr int kTimbreLifter = 12;
constexpr double kTimbreSpreadWeight = 0.2;

RowMatrix gaussian_projection(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * standard_normal(rng);
  return m;
}

const RowMatrix& timbre_projection() {
  static const RowMatrix m = gaussian_projection(kTimbreDim, kTimbreDim, kTimbreProjectionSeed);
  return m;
}

const RowMatrix& content_projection() {
  static const RowMatrix m =
      gaussian_projection(kContentDim, kCepstralCoeffs, kContentProjectionSeed);
  return m;
}

// Orthonormal DCT-II rows 1..count of an n-point transform.
RowMatrix dct_matrix(int n, int first, int count) {
  RowMatrix d(count, n);
  for (int k = 0; k < count; ++k) {
    const int coeff = first + k;
    const double norm = std::sqrt((coeff == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i)
      d(k, i) = norm * std::cos(std::numbers::pi * coeff * (i + 0.5) / n);
  }
  return d;
}

// Mean over voiced frames of the log magnitude at the harmonics of F0,
// interpolated onto the mel centre frequencies. Empty when nothing is voiced.
std::vector<double> harmonic_envelope(const AudioBuffer& audio, const F0Curve& f0,
                                      const std::vector<Eigen::Index>& active,
                                      const SpectralConfig& config) {
  const ComplexSpectrogram spec = stft(audio, config);
  const double bin_hz = static_cast<double>(config.sample_rate_hz) / config.fft;
  const double top_hz = 0.95 * config.fmax_hz;
  const double mel_lo = hz_to_mel(config.fmin_hz), mel_hi = hz_to_mel(config.fmax_hz);
  std::vector<double> centers(config.n_mels);
  for (int b = 0; b < config.n_mels; ++b)
    centers[b] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * (b + 1) / (config.n_mels + 1));

  std::vector<double> sum(config.n_mels, 0.0);
  int frames = 0;
  std::vector<double> freq, level;
  for (auto t : active) {
    if (t >= static_cast<Eigen::Index>(f0.size()) || !f0.voiced[t]) continue;
    const double hz = f0.values_hz[t];
    freq.clear();
    level.clear();
    for (int h = 1; h * hz < top_hz; ++h) {
      const int k = static_cast<int>(std::lround(h * hz / bin_hz));
      double peak = 0.0;
      for (int j = std::max(0, k - 1); j <= std::min(config.bins() - 1, k + 1); ++j)
        peak = std::max(peak, std::abs(spec.frames(t, j)));
      freq.push_back(h * hz);
      level.push_back(std::log(std::max(peak, kLogMelFloor)));
    }
    if (freq.empty()) continue;
    std::size_t h = 0;
    for (int b = 0; b < config.n_mels; ++b) {
      const double f = centers[b];
      while (h + 1 < freq.size() && freq[h + 1] < f) ++h;
      double v;
      if (f <= freq.front()) v = level.front();
      else if (h + 1 >= freq.size()) v = level.back();
      else {
        const double w = (f - freq[h]) / (freq[h + 1] - freq[h]);
        v = (1.0 - w) * level[h] + w * level[h + 1];
      }
      sum[b] += v;
    }
    ++frames;
  }
  if (frames == 0) return {};
  for (double& v : sum) v /= frames;
  return sum;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("shape-mismatch", "cosine of unequal lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

std::vector<double> timbre_statistics(const AudioBuffer& audio, const SpectralConfig& config) {
  if (audio.duration_s() < 1.0)
    throw Error("too-short", "reference too short (need at least 1 s)");
  if (config.n_mels * 2 + kF0HistogramBins != kTimbreDim)
    throw Error("invalid-config", "timbre statistics expect 80 mel bins");
  const MelSpectrogram mel = mel_spectrogram(audio, config);
  const AmplitudeEnvelope rms = extract_amplitude(audio, DomainMode::Singing, config);
  const double peak = *std::max_element(rms.values.begin(), rms.values.end());

  std::vector<Eigen::Index> active;
  for (std::size_t t = 0; t < rms.size(); ++t)
    if (peak <= 0.0 || rms.values[t] > 0.1 * peak) active.push_back(static_cast<Eigen::Index>(t));

  std::vector<double> stats(kTimbreDim, 0.0);
  const int n_mels = config.n_mels;
  for (int b = 0; b < n_mels; ++b) {
    double sum = 0.0;
    for (auto t : active) sum += mel.frames(t, b);
    const double mean = sum / active.size();
    double sq = 0.0;
    for (auto t : active) sq += (mel.frames(t, b) - mean) * (mel.frames(t, b) - mean);
    stats[b] = mean;
    stats[n_mels + b] = std::sqrt(sq / active.size());
  }

  const F0Curve f0 = extract_f0(audio, DomainMode::Singing, config);
  const auto envelope = harmonic_envelope(audio, f0, active, config);
  if (!envelope.empty()) std::copy(envelope.begin(), envelope.end(), stats.begin());

  // Keep the broad envelope shape: drop the level (c0) and formant-scale
  // detail above kTimbreLifter, which follows the phonetic content.
  static const RowMatrix lifter = dct_matrix(80, 1, kTimbreLifter);
  const RowMatrix basis = n_mels == 80 ? lifter : dct_matrix(n_mels, 1, kTimbreLifter);
  Eigen::Map<Eigen::VectorXd> means(stats.data(), n_mels);
  means = (basis.transpose() * (basis * means)).eval();
  Eigen::Map<Eigen::VectorXd> spreads(stats.data() + n_mels, n_mels);
  spreads = (kTimbreSpreadWeight * (spreads.array() - spreads.mean())).matrix().eval();

  if (f0.voiced_count() > 0) {
    const double median = f0_statistics(f0).median_hz;
    const double count = static_cast<double>(f0.voiced_count());
    for (std::size_t t = 0; t < f0.size(); ++t) {
      if (!f0.voiced[t]) continue;
      const double offset = std::clamp(std::log2(f0.values_hz[t] / median), -1.0, 1.0);
      int bin = static_cast<int>(std::floor((offset + 1.0) / 2.0 * kF0HistogramBins));
      bin = std::clamp(bin, 0, kF0HistogramBins - 1);
      stats[2 * n_mels + bin] += kF0HistogramWeight / count;
    }
  }
  return stats;
}

TimbreEmbedding timbre_embed(const AudioBuffer& audio, const SpectralConfig& config) {
  const auto stats = timbre_statistics(audio, config);
  const Eigen::Map<const Eigen::VectorXd> s(stats.data(), kTimbreDim);
  Eigen::VectorXd projected = timbre_projection() * s;
  const double norm = projected.norm();
  if (norm > 0.0) projected /= norm;
  return TimbreEmbedding{std::vector<double>(projected.data(), projected.data() + kTimbreDim)};
}

ContentEmbeddingSequence content_encode_local(const AudioBuffer& audio,
                                              const SpectralConfig& config) {
  if (audio.size() < static_cast<std::size_t>(config.win))
    throw Error("too-short", "audio shorter than one analysis window");
  AudioBuffer normalized = audio;
  double peak = 0.0;
  for (double v : audio.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : normalized.samples) v /= peak;

  const MelSpectrogram mel = mel_spectrogram(normalized, config);
  static const RowMatrix dct = dct_matrix(80, 1, kCepstralCoeffs);
  const RowMatrix basis =
      config.n_mels == 80 ? dct : dct_matrix(config.n_mels, 1, kCepstralCoeffs);
  RowMatrix ceps = mel.frames * basis.transpose();  // T x 20

  const Eigen::RowVectorXd mean = ceps.colwise().mean();
  ceps.rowwise() -= mean;
  const Eigen::RowVectorXd stddev =
      (ceps.array().square().colwise().sum() / static_cast<double>(ceps.rows())).sqrt();
  for (Eigen::Index k = 0; k < ceps.cols(); ++k)
    ceps.col(k) /= std::max(stddev(k), 1e-3);

  return ContentEmbeddingSequence{ceps * content_projection().transpose(),
                                  ContentSource::LocalAudio};
}

LyricFrames lyric_frames(const AlignedLyrics& lyrics, int total_frames) {
  LyricFrames out{std::vector<int>(total_frames, -1), std::vector<double>(total_frames, 0.0)};
  for (const auto& p : lyrics.phonemes) {
    const int len = p.end_frame - p.start_frame;
    for (int f = std::max(0, p.start_frame); f < std::min(p.end_frame, total_frames); ++f) {
      out.phone_ids[f] = p.symbol;
      out.positions[f] = len > 1 ? static_cast<double>(f - p.start_frame) / (len - 1) : 0.0;
    }
  }
  for (int f = 0; f < total_frames; ++f)
    if (out.phone_ids[f] < 0)
      throw Error("uncovered-frame",
                  "frame " + std::to_string(f) + " is not covered by any phoneme");
  return out;
}

ContentEmbeddingSequence content_encode_lyrics(const AlignedLyrics& lyrics,
                                               const PerformanceTiming& timing,
                                               const Params<float>& params) {
  const LyricFrames frames = lyric_frames(lyrics, timing.total_frames);
  ModelInput<float> input;
  input.frame_features = Mat<float>::Zero(kFrameFeatures, timing.total_frames);
  input.phone_ids = frames.phone_ids;
  input.phone_position.assign(frames.positions.begin(), frames.positions.end());
  input.timbre = Vec<float>::Zero(params.layout->config().timbre_dim);
  const Mat<float> encoded = encode_lyrics<float>(params, input);
  return ContentEmbeddingSequence{encoded.transpose().cast<double>(), ContentSource::Lyrics};
}

std::vector<float> style_embed(const StyleToken& token, const Params<float>& params) {
  const auto col = params.mat(params.layout->style_table).col(token.index());
  return std::vector<float>(col.data(), col.data() + col.size());
}

void write_embedding_dump(const std::filesystem::path& path,
                          const std::vector<std::vector<float>>& rows) {
  const std::uint32_t dims = rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path.string());
  auto put = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  out.write("ZSEM", 4);
  put(dims);
  put(static_cast<std::uint32_t>(rows.size()));
  put(1);
  for (const auto& r : rows) {
    if (r.size() != dims) throw Error("shape-mismatch", "ragged embedding rows");
    for (float f : r) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put(bits);
    }
  }
}

std::vector<std::vector<float>> read_embedding_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open " + path.string());
  auto get = [&]() {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
      throw Error("parse-error", "truncated embedding dump");
    return static_cast<std::uint32_t>(b[0] | (b[1] << 8) | (b[2] << 16) |
                                      (static_cast<std::uint32_t>(b[3]) << 24));
  };
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ZSEM", 4) != 0)
    throw Error("parse-error", "not an embedding dump");
  const auto dims = get();
  const auto count = get();
  if (get() != 1) throw Error("parse-error", "unsupported dtype");
  std::vector<std::vector<float>> rows(count, std::vector<float>(dims));
  for (auto& r : rows)
    for (auto& f : r) {
      const std::uint32_t bits = get();
      std::memcpy(&f, &bits, 4);
    }
  return rows;
}

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double hann_lobe(double d) {
  if (std::abs(d) >= 2.0) return 0.0;
  return std::abs(sinc(d) + 0.5 * sinc(d - 1.0) + 0.5 * sinc(d + 1.0));
}

}  // namespace

Eigen::MatrixXd harmonic_template(const F0Curve& f0, int frames, const SpectralConfig& config) {
  const RowMatrix fb = mel_filterbank(config);
  const int bins = config.fft / 2 + 1;
  const double df = static_cast<double>(config.sample_rate_hz) / config.fft;
  const double top = std::min(config.fmax_hz, 0.5 * config.sample_rate_hz);
  const Eigen::VectorXd rowsum = fb.rowwise().sum();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(config.n_mels, frames);
  Eigen::VectorXd mag(bins);
  const int n = std::min<int>(frames, static_cast<int>(f0.values_hz.size()));
  for (int t = 0; t < n; ++t) {
    const double hz = f0.values_hz[t];
    if (!f0.voiced[t] || hz <= 0.0) continue;
    mag.setZero();
    for (int h = 1; h * hz < top; ++h) {
      const double centre = h * hz / df;
      const int lo = std::max(0, static_cast<int>(std::ceil(centre - 2.0)));
      const int hi = std::min(bins - 1, static_cast<int>(std::floor(centre + 2.0)));
      for (int k = lo; k <= hi; ++k) mag(k) += hann_lobe(k - centre);
    }
    const Eigen::VectorXd mel = fb * mag;
    for (int b = 0; b < config.n_mels; ++b) {
      const double level = rowsum(b) * 2.0 * df / hz;
      const double v = level > 0.0 ? std::log(mel(b) / level + 1e-3) : 0.0;
      out(b, t) = std::clamp(v, -6.0, 3.0);
    }
  }
  return out;
}

}  // namespace zs
