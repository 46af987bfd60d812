#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zerosing/dsp.hpp"
#include "zerosing/model.hpp"

namespace zs {

/// SVS and SVC-with-lyrics share one lyric-conditioned model; SVC with local
/// content is a separate model trained on singing only.
enum class ModelVariant { Svs, SvcB, SvcC };

ModelVariant variant_from_string(const std::string& s);
const char* to_string(ModelVariant v);
ContentSource content_source(ModelVariant v);

struct TrainConfig {
  ModelVariant variant = ModelVariant::Svs;
  int batch_size = 8;
  double learning_rate = 2e-4;
  int iterations = 20000;
  bool mix = true;
  std::uint64_t seed = 0;
  int crop_frames = 128;
  int log_every = 100;
  int checkpoint_every = 1000;  // 0 disables periodic checkpoints

  /// Throws "invalid-config"; rejects mixed training for svc-c.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Per-bin min/max of training log-mels mapped to [-1, 1].
struct MelNormalizer {
  std::vector<float> min;
  std::vector<float> max;

  static MelNormalizer fit(const std::vector<const MelSpectrogram*>& mels);
  /// n_mels x T.
  Mat<float> normalize(const MelSpectrogram& mel) const;
  MelSpectrogram denormalize(const Mat<float>& x, const SpectralConfig& config) const;
  bool operator==(const MelNormalizer&) const = default;
};

struct OptimizerState {
  long long iterations = 0;
  std::vector<double> m;
  std::vector<double> v;
};

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  MelNormalizer mel_norm;
  Params<float> params;
  long long step = 0;
  std::optional<OptimizerState> optimizer;
  std::string rng_state;  // textual std::mt19937_64 state

  /// FNV-1a of the model config and variant; stored in the file header.
  std::uint64_t config_hash() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws "config-mismatch" unless the checkpoint was trained with the
/// expected variant's content source.
void require_content_source(const Checkpoint& ckpt, ContentSource expected);

}  // namespace zs
