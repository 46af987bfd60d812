#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "zerosing/dsp.hpp"
#include "zerosing/features.hpp"
#include "zerosing/model.hpp"
#include "zerosing/performance.hpp"
#include "zerosing/score.hpp"

namespace zs {

inline constexpr int kTimbreDim = 192;
inline constexpr int kContentDim = 64;
inline constexpr int kCepstralCoeffs = 20;
inline constexpr int kF0HistogramBins = 32;
/// Total mass of the F0 histogram inside the statistics vector.
inline constexpr double kF0HistogramWeight = 0.5;

/// Unit-norm, time-independent voice vector.
struct TimbreEmbedding {
  std::vector<double> vector;  // kTimbreDim
};

struct ContentEmbeddingSequence {
  RowMatrix frames;  // T x kContentDim
  ContentSource source = ContentSource::LocalAudio;
};

/// Spectral statistics of the reference projected by a fixed seeded matrix
/// and L2-normalized. The statistics are the mean log spectral envelope at the
/// mel centre frequencies (sampled at the harmonics of voiced active frames,
/// plain mean log-mel when nothing is voiced), cepstrally smoothed and
/// level-free; the centered per-bin log-mel standard deviation
/// (down-weighted); and a histogram of voiced log-F0 offsets from the median.
/// Requires at least one second of audio ("reference too short").
TimbreEmbedding timbre_embed(const AudioBuffer& audio, const SpectralConfig& config = {});

/// The 192-dim statistics vector before projection.
std::vector<double> timbre_statistics(const AudioBuffer& audio,
                                      const SpectralConfig& config = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Gain-normalized mel-cepstra (coefficients 1..20), per-utterance
/// mean/variance normalized, projected to 64 dims by a fixed matrix.
ContentEmbeddingSequence content_encode_local(const AudioBuffer& audio,
                                              const SpectralConfig& config = {});

/// Per-frame phoneme ids and within-phoneme positions for frames
/// [0, total_frames). Throws "uncovered-frame" when a frame has no phoneme.
struct LyricFrames {
  std::vector<int> phone_ids;
  std::vector<double> positions;
};
LyricFrames lyric_frames(const AlignedLyrics& lyrics, int total_frames);

/// Runs the trained lyric encoder (float parameters).
ContentEmbeddingSequence content_encode_lyrics(const AlignedLyrics& lyrics,
                                               const PerformanceTiming& timing,
                                               const Params<float>& params);

/// Log-mel comb of an ideal flat harmonic source at each voiced F0, relative
/// to the level of a flat spectrum with the same power per hertz. Harmonics
/// are Hann main lobes up to fmax; clamped to [-6, 3]; unvoiced columns are
/// zero. n_mels x frames.
Eigen::MatrixXd harmonic_template(const F0Curve& f0, int frames, const SpectralConfig& config = {});

/// Style table lookup (column of the trainable table).
std::vector<float> style_embed(const StyleToken& token, const Params<float>& params);

/// Binary dump: magic "ZSEM", u32 dims, u32 count, u32 dtype (1 = f32),
/// then count*dims little-endian floats.
void write_embedding_dump(const std::filesystem::path& path,
                          const std::vector<std::vector<float>>& rows);
std::vector<std::vector<float>> read_embedding_dump(const std::filesystem::path& path);

}  // namespace zs
