#include "zerosing/model.hpp"

#include <cmath>
#include <functional>

#include "zerosing/error.hpp"
#include "zerosing/random.hpp"

namespace zs {

using nlohmann::json;

// ---------------------------------------------------------------- config

json ModelConfig::to_json() const {
  return json{{"n_mels", n_mels},
              {"channels", channels},
              {"n_blocks", n_blocks},
              {"step_in", step_in},
              {"step_mid", step_mid},
              {"step_out", step_out},
              {"content_dim", content_dim},
              {"timbre_dim", timbre_dim},
              {"style_dim", style_dim},
              {"phone_embed", phone_embed},
              {"encoder_hidden", encoder_hidden},
              {"num_phonemes", num_phonemes},
              {"num_styles", num_styles},
              {"leaky_slope", leaky_slope},
              {"content", content == ContentSource::Lyrics ? "lyrics" : "local"},
              {"diffusion_steps", diffusion_steps},
              {"beta_start", beta_start},
              {"beta_end", beta_end},
              {"sigma_data", sigma_data}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    c.n_mels = j.value("n_mels", c.n_mels);
    c.channels = j.value("channels", c.channels);
    c.n_blocks = j.value("n_blocks", c.n_blocks);
    c.step_in = j.value("step_in", c.step_in);
    c.step_mid = j.value("step_mid", c.step_mid);
    c.step_out = j.value("step_out", c.step_out);
    c.content_dim = j.value("content_dim", c.content_dim);
    c.timbre_dim = j.value("timbre_dim", c.timbre_dim);
    c.style_dim = j.value("style_dim", c.style_dim);
    c.phone_embed = j.value("phone_embed", c.phone_embed);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.num_phonemes = j.value("num_phonemes", c.num_phonemes);
    c.num_styles = j.value("num_styles", c.num_styles);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    const std::string content = j.value("content", std::string("lyrics"));
    if (content == "lyrics")
      c.content = ContentSource::Lyrics;
    else if (content == "local")
      c.content = ContentSource::LocalAudio;
    else
      throw Error("invalid-config", "unknown content source '" + content + "'");
    c.diffusion_steps = j.value("diffusion_steps", c.diffusion_steps);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.sigma_data = j.value("sigma_data", c.sigma_data);
  } catch (const json::exception& e) {
    throw Error("invalid-config", std::string("model config: ") + e.what());
  }
  return c;
}

std::uint64_t ModelConfig::hash() const { return fnv1a64(to_json().dump()); }

ModelConfig ModelConfig::small(ContentSource content) {
  ModelConfig c;
  c.n_mels = 5;
  c.channels = 6;
  c.n_blocks = 2;
  c.step_in = 8;
  c.step_mid = 10;
  c.step_out = 7;
  c.content_dim = 4;
  c.timbre_dim = 5;
  c.style_dim = 3;
  c.phone_embed = 4;
  c.encoder_hidden = 6;
  c.num_phonemes = 9;
  c.content = content;
  c.diffusion_steps = 50;
  return c;
}

// ---------------------------------------------------------------- layout

int ParamLayout::add(const std::string& name, int rows, int cols) {
  blocks_.push_back({name, rows, cols, total_});
  total_ += static_cast<std::size_t>(rows) * cols;
  return static_cast<int>(blocks_.size() - 1);
}

int ParamLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return static_cast<int>(i);
  return -1;
}

ParamLayout::ParamLayout(const ModelConfig& c) : config_(c) {
  if (c.content == ContentSource::Lyrics) {
    enc_table = add("encoder.phone_table", c.phone_embed, c.num_phonemes);
    enc_w1 = add("encoder.w1", c.encoder_hidden, c.phone_embed + 1);
    enc_b1 = add("encoder.b1", c.encoder_hidden, 1);
    enc_w2 = add("encoder.w2", c.content_dim, c.encoder_hidden);
    enc_b2 = add("encoder.b2", c.content_dim, 1);
  }
  style_table = add("style.table", c.style_dim, c.num_styles);
  step_w1 = add("step.w1", c.step_mid, c.step_in);
  step_b1 = add("step.b1", c.step_mid, 1);
  step_w2 = add("step.w2", c.step_out, c.step_mid);
  step_b2 = add("step.b2", c.step_out, 1);
  in_x = add("denoiser.in_x", c.channels, c.n_mels);
  in_f = add("denoiser.in_frame", c.channels, kFrameFeatures);
  in_c = add("denoiser.in_content", c.channels, c.content_dim);
  in_g = add("denoiser.in_global", c.channels, c.global_dim());
  in_b = add("denoiser.in_b", c.channels, 1);
  for (int b = 0; b < c.n_blocks; ++b) {
    const std::string p = "denoiser.block" + std::to_string(b) + ".";
    Residual r;
    r.step_w = add(p + "step_w", c.channels, c.step_out);
    r.step_b = add(p + "step_b", c.channels, 1);
    r.conv_w = add(p + "conv_w", c.channels, 3 * c.channels);
    r.conv_b = add(p + "conv_b", c.channels, 1);
    r.out_w = add(p + "out_w", c.channels, c.channels);
    r.out_b = add(p + "out_b", c.channels, 1);
    residual.push_back(r);
  }
  out_w = add("denoiser.out_w", c.n_mels, c.channels);
  out_b = add("denoiser.out_b", c.n_mels, 1);
  skip_gain = add("denoiser.skip_gain", 1, 1);
  pitch_gain = add("denoiser.pitch_gain", c.n_mels, 1);
  in_p = add("denoiser.in_pitch", c.channels, c.n_mels);

  if (c.diffusion_steps < 2 || !(c.sigma_data > 0.0))
    throw Error("invalid-config", "model needs diffusion_steps >= 2 and sigma_data > 0");
  double alpha_bar = 1.0;
  for (int t = 1; t <= c.diffusion_steps; ++t) {
    const double beta =
        c.beta_start + static_cast<double>(t - 1) / (c.diffusion_steps - 1) * (c.beta_end - c.beta_start);
    alpha_bar *= 1.0 - beta;
    const double s2 = 1.0 - alpha_bar, a2 = alpha_bar, sd2 = c.sigma_data * c.sigma_data;
    skip_.push_back(std::sqrt(s2) / (s2 + a2 * sd2));
    out_.push_back(std::sqrt(a2) * c.sigma_data / std::sqrt(s2 + a2 * sd2));
  }
}

template <class S>
Params<S> init_params(std::shared_ptr<const ParamLayout> layout, std::uint64_t seed) {
  Params<S> p(layout);
  Rng rng(derive_seed(seed, "init"));
  auto fill = [&](int id, double stddev) {
    if (id < 0) return;
    auto m = p.mat(id);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        m(i, j) = static_cast<S>(stddev * standard_normal(rng));
  };
  auto fan_in = [&](int id) { return 1.0 / std::sqrt(layout->blocks()[id].cols); };
  const auto& L = *layout;
  fill(L.enc_table, 1.0);
  fill(L.enc_w1, fan_in(L.enc_w1));
  fill(L.enc_w2, fan_in(L.enc_w2));
  fill(L.style_table, 1.0);
  fill(L.step_w1, fan_in(L.step_w1));
  fill(L.step_w2, fan_in(L.step_w2));
  const double in_scale =
      1.0 / std::sqrt(L.config().n_mels + kFrameFeatures + L.config().content_dim +
                      L.config().global_dim());
  fill(L.in_x, in_scale);
  fill(L.in_f, in_scale);
  fill(L.in_c, in_scale);
  fill(L.in_g, in_scale);
  for (const auto& r : L.residual) {
    fill(r.step_w, fan_in(r.step_w));
    fill(r.conv_w, fan_in(r.conv_w));
    fill(r.out_w, 0.5 * fan_in(r.out_w));
  }
  fill(L.out_w, 0.1 * fan_in(L.out_w));
  p.mat(L.skip_gain)(0, 0) = S(1);
  fill(L.in_p, in_scale);
  return p;
}

// ---------------------------------------------------------------- inputs

template <class S>
void ModelInput<S>::check(const ModelConfig& c) const {
  const auto T = frames();
  auto fail = [](const std::string& what) { throw Error("shape-mismatch", what); };
  if (frame_features.rows() != kFrameFeatures) fail("frame feature rows");
  if (T < 1) fail("conditioning has no frames");
  if (c.content == ContentSource::Lyrics) {
    if (static_cast<int>(phone_ids.size()) != T ||
        static_cast<int>(phone_position.size()) != T)
      fail("lyric frame count differs from conditioning length");
    for (int id : phone_ids)
      if (id < 0 || id >= c.num_phonemes) fail("phoneme id out of range");
  } else if (content.rows() != c.content_dim || content.cols() != T) {
    fail("content embedding shape differs from conditioning");
  }
  if (timbre.size() != c.timbre_dim) fail("timbre dimension");
  if (pitch_template.size() > 0 && (pitch_template.rows() != c.n_mels || pitch_template.cols() != T))
    fail("pitch template shape");
  if (style < 0 || style >= c.num_styles) fail("style index");
}

template <class S>
ModelInput<S> ModelInput<S>::crop(int start, int length) const {
  ModelInput out;
  out.frame_features = frame_features.middleCols(start, length);
  if (content.cols() > 0) out.content = content.middleCols(start, length);
  if (!phone_ids.empty()) {
    out.phone_ids.assign(phone_ids.begin() + start, phone_ids.begin() + start + length);
    out.phone_position.assign(phone_position.begin() + start,
                              phone_position.begin() + start + length);
  }
  if (pitch_template.cols() > 0) out.pitch_template = pitch_template.middleCols(start, length);
  out.timbre = timbre;
  out.style = style;
  return out;
}

template <class S>
Vec<S> step_encoding(int t, int dims) {
  const int half = dims / 2;
  Vec<S> e(dims);
  for (int i = 0; i < half; ++i) {
    const double freq = half > 1 ? std::pow(10.0, -4.0 * i / (half - 1)) : 1.0;
    e(i) = static_cast<S>(std::sin(t * freq));
    e(half + i) = static_cast<S>(std::cos(t * freq));
  }
  return e;
}

// ---------------------------------------------------------------- forward

namespace {

template <class S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <class S>
Mat<S> swish(const Mat<S>& x) {
  return x.unaryExpr([](S v) { return v * sigmoid(v); });
}

template <class S>
Mat<S> swish_grad(const Mat<S>& x) {
  return x.unaryExpr([](S v) {
    const S s = sigmoid(v);
    return s + v * s * (S(1) - s);
  });
}

template <class S>
struct EncoderCache {
  Mat<S> in, a1, h1, a2;
};

template <class S>
struct ForwardCache {
  Vec<S> enc, step_a1, step_h1, step_a2, step_out, global;
  Mat<S> content;
  EncoderCache<S> encoder;
  std::vector<Mat<S>> h;  // residual stream entering each block, plus final
  std::vector<Mat<S>> y, z, a;
  Mat<S> final_act;
};

template <class S>
Mat<S> run_encoder(const Params<S>& p, const ModelInput<S>& input, EncoderCache<S>* cache) {
  const auto& L = *p.layout;
  const auto& c = L.config();
  const int T = input.frames();
  Mat<S> in(c.phone_embed + 1, T);
  const auto table = p.mat(L.enc_table);
  for (int t = 0; t < T; ++t) {
    in.col(t).head(c.phone_embed) = table.col(input.phone_ids[t]);
    in(c.phone_embed, t) = input.phone_position[t];
  }
  Mat<S> a1 = p.mat(L.enc_w1) * in;
  a1.colwise() += p.mat(L.enc_b1).col(0);
  Mat<S> h1 = a1.array().tanh().matrix();
  Mat<S> a2 = p.mat(L.enc_w2) * h1;
  a2.colwise() += p.mat(L.enc_b2).col(0);
  const S slope = static_cast<S>(c.leaky_slope);
  Mat<S> out = a2.unaryExpr([slope](S v) { return v >= S(0) ? v : slope * v; });
  if (cache) *cache = {std::move(in), std::move(a1), std::move(h1), std::move(a2)};
  return out;
}

// Kernel-3 dilated convolution, zero padded, taps at t-d, t, t+d.
template <class S>
Mat<S> dilated_conv(const Eigen::Map<const Mat<S>>& w, const Mat<S>& y, int d) {
  const Eigen::Index ch = y.rows(), T = y.cols();
  Mat<S> z = w.middleCols(ch, ch) * y;
  if (T > d) {
    z.rightCols(T - d).noalias() += w.leftCols(ch) * y.leftCols(T - d);
    z.leftCols(T - d).noalias() += w.rightCols(ch) * y.rightCols(T - d);
  }
  return z;
}

template <class S>
Mat<S> forward(const Params<S>& p, const Mat<S>& x_t, int t, const ModelInput<S>& input,
               ForwardCache<S>& cache) {
  const auto& L = *p.layout;
  const auto& c = L.config();
  input.check(c);
  if (x_t.rows() != c.n_mels || x_t.cols() != input.frames())
    throw Error("shape-mismatch", "x_t shape differs from conditioning");

  cache.content = c.content == ContentSource::Lyrics ? run_encoder(p, input, &cache.encoder)
                                                     : input.content;
  cache.global.resize(c.global_dim());
  cache.global << input.timbre, p.mat(L.style_table).col(input.style);

  cache.enc = step_encoding<S>(t, c.step_in);
  cache.step_a1 = p.mat(L.step_w1) * cache.enc + p.mat(L.step_b1).col(0);
  cache.step_h1 = swish<S>(cache.step_a1);
  cache.step_a2 = p.mat(L.step_w2) * cache.step_h1 + p.mat(L.step_b2).col(0);
  cache.step_out = swish<S>(cache.step_a2);

  Mat<S> h = p.mat(L.in_x) * x_t;
  h.noalias() += p.mat(L.in_f) * input.frame_features;
  h.noalias() += p.mat(L.in_c) * cache.content;
  if (input.pitch_template.size() > 0) h.noalias() += p.mat(L.in_p) * input.pitch_template;
  const Vec<S> bias = p.mat(L.in_g) * cache.global + p.mat(L.in_b).col(0);
  h.colwise() += bias;

  cache.h.clear();
  cache.y.clear();
  cache.z.clear();
  cache.a.clear();
  for (int b = 0; b < c.n_blocks; ++b) {
    const auto& r = L.residual[b];
    const Vec<S> sb = p.mat(r.step_w) * cache.step_out + p.mat(r.step_b).col(0);
    Mat<S> y = h;
    y.colwise() += sb;
    Mat<S> z = dilated_conv<S>(p.mat(r.conv_w), y, c.dilation(b));
    z.colwise() += p.mat(r.conv_b).col(0);
    Mat<S> a = swish<S>(z);
    cache.h.push_back(h);
    h.noalias() += p.mat(r.out_w) * a;
    h.colwise() += p.mat(r.out_b).col(0);
    cache.y.push_back(std::move(y));
    cache.z.push_back(std::move(z));
    cache.a.push_back(std::move(a));
  }
  cache.h.push_back(h);
  cache.final_act = swish<S>(h);
  Mat<S> out = p.mat(L.out_w) * cache.final_act;
  out.colwise() += p.mat(L.out_b).col(0);
  if (input.pitch_template.size() > 0)
    out.noalias() += p.mat(L.pitch_gain).col(0).asDiagonal() * input.pitch_template;
  out *= static_cast<S>(L.out_scale(t));
  out += (p.mat(L.skip_gain)(0, 0) * static_cast<S>(L.skip_scale(t))) * x_t;
  return out;
}

}  // namespace

template <class S>
Mat<S> encode_lyrics(const Params<S>& params, const ModelInput<S>& input) {
  if (params.layout->enc_table < 0)
    throw Error("invalid-config", "model has no lyric content encoder");
  return run_encoder<S>(params, input, nullptr);
}

template <class S>
Mat<S> predict_noise(const Params<S>& params, const Mat<S>& x_t, int t,
                     const ModelInput<S>& input) {
  ForwardCache<S> cache;
  return forward(params, x_t, t, input, cache);
}

// ---------------------------------------------------------------- backward

template <class S>
Mat<S> predict_noise_backward(const Params<S>& p, const Mat<S>& x_t, int t,
                              const ModelInput<S>& input,
                              const std::function<Mat<S>(const Mat<S>&)>& upstream,
                              Params<S>& g) {
  const auto& L = *p.layout;
  const auto& c = L.config();
  ForwardCache<S> cache;
  Mat<S> eps_hat = forward(p, x_t, t, input, cache);
  const Mat<S> grad_eps = upstream(eps_hat);
  const int T = input.frames();

  g.mat(L.skip_gain)(0, 0) += static_cast<S>(L.skip_scale(t)) * grad_eps.cwiseProduct(x_t).sum();
  const Mat<S> grad_out = static_cast<S>(L.out_scale(t)) * grad_eps;
  if (input.pitch_template.size() > 0)
    g.mat(L.pitch_gain).col(0) += grad_out.cwiseProduct(input.pitch_template).rowwise().sum();

  g.mat(L.out_w).noalias() += grad_out * cache.final_act.transpose();
  g.mat(L.out_b).col(0) += grad_out.rowwise().sum();
  Mat<S> dh = (p.mat(L.out_w).transpose() * grad_out).cwiseProduct(
      swish_grad<S>(cache.h.back()));

  Vec<S> d_step = Vec<S>::Zero(c.step_out);
  for (int b = c.n_blocks - 1; b >= 0; --b) {
    const auto& r = L.residual[b];
    const int d = c.dilation(b);
    const Mat<S>& y = cache.y[b];
    g.mat(r.out_w).noalias() += dh * cache.a[b].transpose();
    g.mat(r.out_b).col(0) += dh.rowwise().sum();
    const Mat<S> dz =
        (p.mat(r.out_w).transpose() * dh).cwiseProduct(swish_grad<S>(cache.z[b]));
    g.mat(r.conv_b).col(0) += dz.rowwise().sum();

    auto gw = g.mat(r.conv_w);
    const auto w = p.mat(r.conv_w);
    const Eigen::Index ch = c.channels;
    gw.middleCols(ch, ch).noalias() += dz * y.transpose();
    Mat<S> dy = w.middleCols(ch, ch).transpose() * dz;
    if (T > d) {
      gw.leftCols(ch).noalias() += dz.rightCols(T - d) * y.leftCols(T - d).transpose();
      gw.rightCols(ch).noalias() += dz.leftCols(T - d) * y.rightCols(T - d).transpose();
      dy.leftCols(T - d).noalias() += w.leftCols(ch).transpose() * dz.rightCols(T - d);
      dy.rightCols(T - d).noalias() += w.rightCols(ch).transpose() * dz.leftCols(T - d);
    }
    const Vec<S> dsb = dy.rowwise().sum();
    g.mat(r.step_w).noalias() += dsb * cache.step_out.transpose();
    g.mat(r.step_b).col(0) += dsb;
    d_step.noalias() += p.mat(r.step_w).transpose() * dsb;
    dh += dy;
  }

  g.mat(L.in_x).noalias() += dh * x_t.transpose();
  g.mat(L.in_f).noalias() += dh * input.frame_features.transpose();
  g.mat(L.in_c).noalias() += dh * cache.content.transpose();
  if (input.pitch_template.size() > 0)
    g.mat(L.in_p).noalias() += dh * input.pitch_template.transpose();
  const Vec<S> d_bias = dh.rowwise().sum();
  g.mat(L.in_g).noalias() += d_bias * cache.global.transpose();
  g.mat(L.in_b).col(0) += d_bias;
  const Vec<S> d_global = p.mat(L.in_g).transpose() * d_bias;
  g.mat(L.style_table).col(input.style) += d_global.tail(c.style_dim);

  // Step-embedding MLP.
  const Vec<S> da2 = d_step.cwiseProduct(swish_grad<S>(Mat<S>(cache.step_a2)).col(0));
  g.mat(L.step_w2).noalias() += da2 * cache.step_h1.transpose();
  g.mat(L.step_b2).col(0) += da2;
  const Vec<S> da1 = (p.mat(L.step_w2).transpose() * da2)
                         .cwiseProduct(swish_grad<S>(Mat<S>(cache.step_a1)).col(0));
  g.mat(L.step_w1).noalias() += da1 * cache.enc.transpose();
  g.mat(L.step_b1).col(0) += da1;

  if (c.content == ContentSource::Lyrics) {
    const auto& e = cache.encoder;
    const S slope = static_cast<S>(c.leaky_slope);
    const Mat<S> dc = p.mat(L.in_c).transpose() * dh;
    const Mat<S> da_out = dc.cwiseProduct(
        e.a2.unaryExpr([slope](S v) { return v >= S(0) ? S(1) : slope; }));
    g.mat(L.enc_w2).noalias() += da_out * e.h1.transpose();
    g.mat(L.enc_b2).col(0) += da_out.rowwise().sum();
    const Mat<S> da_hidden = (p.mat(L.enc_w2).transpose() * da_out)
                                 .cwiseProduct((S(1) - e.h1.array().square()).matrix());
    g.mat(L.enc_w1).noalias() += da_hidden * e.in.transpose();
    g.mat(L.enc_b1).col(0) += da_hidden.rowwise().sum();
    const Mat<S> d_in = p.mat(L.enc_w1).transpose() * da_hidden;
    auto table = g.mat(L.enc_table);
    for (int f = 0; f < T; ++f)
      table.col(input.phone_ids[f]) += d_in.col(f).head(c.phone_embed);
  }
  return eps_hat;
}

#define ZS_INSTANTIATE(S)                                                               \
  template Params<S> init_params<S>(std::shared_ptr<const ParamLayout>, std::uint64_t); \
  template struct ModelInput<S>;                                                        \
  template Vec<S> step_encoding<S>(int, int);                                           \
  template Mat<S> encode_lyrics<S>(const Params<S>&, const ModelInput<S>&);             \
  template Mat<S> predict_noise<S>(const Params<S>&, const Mat<S>&, int,                \
                                   const ModelInput<S>&);                               \
  template Mat<S> predict_noise_backward<S>(                                            \
      const Params<S>&, const Mat<S>&, int, const ModelInput<S>&,                       \
      const std::function<Mat<S>(const Mat<S>&)>&, Params<S>&);

ZS_INSTANTIATE(float)
ZS_INSTANTIATE(double)

#undef ZS_INSTANTIATE

}  // namespace zs
