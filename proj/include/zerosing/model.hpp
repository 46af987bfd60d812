#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace zs {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

enum class ContentSource { Lyrics, LocalAudio };

/// log-F0 (octaves re 220 Hz), voiced flag, normalized amplitude.
inline constexpr int kFrameFeatures = 3;

struct ModelConfig {
  int n_mels = 80;
  int channels = 64;
  int n_blocks = 4;  // dilation 2^b, kernel 3
  int step_in = 128;
  int step_mid = 512;
  int step_out = 512;
  int content_dim = 64;
  int timbre_dim = 192;
  int style_dim = 8;
  int phone_embed = 32;
  int encoder_hidden = 64;
  int num_phonemes = 64;
  int num_styles = 4;
  double leaky_slope = 0.1;
  ContentSource content = ContentSource::Lyrics;
  int diffusion_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  /// Data scale assumed by the fixed skip from x_t to the output.
  double sigma_data = 0.2;

  int dilation(int block) const { return 1 << block; }
  int global_dim() const { return timbre_dim + style_dim; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  /// FNV-1a over the canonical JSON form.
  std::uint64_t hash() const;
  /// Reduced shapes for finite-difference checks.
  static ModelConfig small(ContentSource content = ContentSource::Lyrics);
  bool operator==(const ModelConfig&) const = default;
};

struct ParamBlock {
  std::string name;
  int rows;
  int cols;
  std::size_t offset;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Named views into one flat parameter vector.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::size_t total() const { return total_; }
  /// -1 if absent.
  int find(const std::string& name) const;

  struct Residual {
    int step_w, step_b, conv_w, conv_b, out_w, out_b;
  };
  // Block ids (-1 when the block does not exist for this config).
  int enc_table = -1, enc_w1 = -1, enc_b1 = -1, enc_w2 = -1, enc_b2 = -1;
  int style_table = -1;
  int step_w1 = -1, step_b1 = -1, step_w2 = -1, step_b2 = -1;
  int in_x = -1, in_f = -1, in_c = -1, in_g = -1, in_b = -1;
  std::vector<Residual> residual;
  int out_w = -1, out_b = -1, skip_gain = -1, pitch_gain = -1, in_p = -1;

  /// eps_hat = gain * skip(t) * x_t + out(t) * network(x_t): with
  /// s = sqrt(1 - alpha_bar_t), a = sqrt(alpha_bar_t),
  /// skip = s / (s^2 + a^2 sigma^2), out = a sigma / sqrt(s^2 + a^2 sigma^2).
  double skip_scale(int t) const { return skip_.at(t - 1); }
  double out_scale(int t) const { return out_.at(t - 1); }

 private:
  int add(const std::string& name, int rows, int cols);

  ModelConfig config_;
  std::vector<double> skip_, out_;
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

template <class S>
struct Params {
  std::shared_ptr<const ParamLayout> layout;
  /// Aligned so vectorized reductions see the same block alignment every run.
  std::vector<S, Eigen::aligned_allocator<S>> values;

  Params() = default;
  explicit Params(std::shared_ptr<const ParamLayout> l)
      : layout(std::move(l)), values(layout->total(), S(0)) {}

  Eigen::Map<Mat<S>> mat(int id) {
    const auto& b = layout->blocks()[id];
    return Eigen::Map<Mat<S>>(values.data() + b.offset, b.rows, b.cols);
  }
  Eigen::Map<const Mat<S>> mat(int id) const {
    const auto& b = layout->blocks()[id];
    return Eigen::Map<const Mat<S>>(values.data() + b.offset, b.rows, b.cols);
  }
  void set_zero() { std::fill(values.begin(), values.end(), S(0)); }

  template <class T>
  Params<T> cast() const {
    Params<T> out(layout);
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<T>(values[i]);
    return out;
  }
};

/// Fan-in scaled Gaussian weights, zero biases, unit-variance tables.
template <class S>
Params<S> init_params(std::shared_ptr<const ParamLayout> layout, std::uint64_t seed);

/// Per-utterance conditioning in network units.
template <class S>
struct ModelInput {
  Mat<S> frame_features;         // kFrameFeatures x T
  Mat<S> content;                // content_dim x T (LocalAudio)
  std::vector<int> phone_ids;    // T (Lyrics)
  std::vector<S> phone_position; // T (Lyrics), in [0, 1]
  Mat<S> pitch_template;         // n_mels x T harmonic comb from F0; empty means none
  Vec<S> timbre;                 // timbre_dim
  int style = 0;

  int frames() const { return static_cast<int>(frame_features.cols()); }
  /// Throws "shape-mismatch" on inconsistent lengths.
  void check(const ModelConfig& config) const;
  /// Frames [start, start + length).
  ModelInput crop(int start, int length) const;
};

/// 128-dim sinusoidal step encoding: sin then cos, frequencies 1 .. 1e-4.
template <class S>
Vec<S> step_encoding(int t, int dims);

/// Lyric content encoder output (content_dim x T).
template <class S>
Mat<S> encode_lyrics(const Params<S>& params, const ModelInput<S>& input);

/// Noise prediction for x_t (n_mels x T).
template <class S>
Mat<S> predict_noise(const Params<S>& params, const Mat<S>& x_t, int t,
                     const ModelInput<S>& input);

/// Same as predict_noise, also accumulating parameter gradients of
/// sum(grad_out .* eps_hat) into `grad`.
template <class S>
Mat<S> predict_noise_backward(const Params<S>& params, const Mat<S>& x_t, int t,
                              const ModelInput<S>& input,
                              const std::function<Mat<S>(const Mat<S>&)>& upstream,
                              Params<S>& grad);

}  // namespace zs
