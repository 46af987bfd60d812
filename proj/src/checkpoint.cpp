#include "zerosing/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "zerosing/error.hpp"
#include "zerosing/random.hpp"

namespace zs {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'Z', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const void* p, std::size_t n) {
    // The format is little-endian; so is every supported host.
    const auto* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  template <class T>
  T take() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("parse-error", "truncated checkpoint");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ModelVariant variant_from_string(const std::string& s) {
  if (s == "svs") return ModelVariant::Svs;
  if (s == "svc-b") return ModelVariant::SvcB;
  if (s == "svc-c") return ModelVariant::SvcC;
  throw Error("invalid-argument", "unknown model '" + s + "' (svs, svc-b, svc-c)");
}

const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Svs: return "svs";
    case ModelVariant::SvcB: return "svc-b";
    case ModelVariant::SvcC: return "svc-c";
  }
  return "?";
}

ContentSource content_source(ModelVariant v) {
  return v == ModelVariant::SvcC ? ContentSource::LocalAudio : ContentSource::Lyrics;
}

void TrainConfig::validate() const {
  if (variant == ModelVariant::SvcC && mix)
    throw Error("invalid-config", "svc-c trains on singing only");
  if (batch_size < 1) throw Error("invalid-config", "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("invalid-config", "learning_rate must be > 0");
  if (iterations < 0) throw Error("invalid-config", "iterations must be >= 0");
  if (crop_frames < 8) throw Error("invalid-config", "crop_frames must be >= 8");
  if (log_every < 1) throw Error("invalid-config", "log_every must be >= 1");
  if (checkpoint_every < 0) throw Error("invalid-config", "checkpoint_every must be >= 0");
}

json TrainConfig::to_json() const {
  return json{{"variant", to_string(variant)},   {"batch_size", batch_size},
              {"learning_rate", learning_rate},  {"iterations", iterations},
              {"mix", mix},                      {"seed", seed},
              {"crop_frames", crop_frames},      {"log_every", log_every},
              {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.iterations = j.value("iterations", c.iterations);
    c.mix = j.value("mix", c.mix);
    c.seed = j.value("seed", c.seed);
    c.crop_frames = j.value("crop_frames", c.crop_frames);
    c.log_every = j.value("log_every", c.log_every);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  } catch (const json::exception& e) {
    throw Error("invalid-config", std::string("train config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------- mel norm

MelNormalizer MelNormalizer::fit(const std::vector<const MelSpectrogram*>& mels) {
  if (mels.empty()) throw Error("invalid-argument", "no spectrograms to fit");
  const auto bins = mels.front()->frames.cols();
  MelNormalizer n;
  n.min.assign(bins, std::numeric_limits<float>::max());
  n.max.assign(bins, std::numeric_limits<float>::lowest());
  for (const auto* m : mels) {
    if (m->frames.cols() != bins) throw Error("shape-mismatch", "mel bin counts differ");
    for (Eigen::Index b = 0; b < bins; ++b) {
      n.min[b] = std::min(n.min[b], static_cast<float>(m->frames.col(b).minCoeff()));
      n.max[b] = std::max(n.max[b], static_cast<float>(m->frames.col(b).maxCoeff()));
    }
  }
  // Bins that never move (e.g. always at the floor) still need a range.
  for (Eigen::Index b = 0; b < bins; ++b)
    if (n.max[b] - n.min[b] < 1e-3f) n.max[b] = n.min[b] + 1e-3f;
  return n;
}

Mat<float> MelNormalizer::normalize(const MelSpectrogram& mel) const {
  const auto bins = static_cast<Eigen::Index>(min.size());
  if (mel.frames.cols() != bins) throw Error("shape-mismatch", "mel bins differ from normalizer");
  Mat<float> x(bins, mel.frames.rows());
  for (Eigen::Index t = 0; t < mel.frames.rows(); ++t)
    for (Eigen::Index b = 0; b < bins; ++b)
      x(b, t) = 2.0f * (static_cast<float>(mel.frames(t, b)) - min[b]) / (max[b] - min[b]) - 1.0f;
  return x;
}

MelSpectrogram MelNormalizer::denormalize(const Mat<float>& x,
                                          const SpectralConfig& config) const {
  const auto bins = static_cast<Eigen::Index>(min.size());
  if (x.rows() != bins) throw Error("shape-mismatch", "mel bins differ from normalizer");
  MelSpectrogram mel{RowMatrix(x.cols(), bins), config};
  for (Eigen::Index t = 0; t < x.cols(); ++t)
    for (Eigen::Index b = 0; b < bins; ++b)
      mel.frames(t, b) = min[b] + (static_cast<double>(x(b, t)) + 1.0) * 0.5 * (max[b] - min[b]);
  return mel;
}

// ---------------------------------------------------------------- file

std::uint64_t Checkpoint::config_hash() const {
  return fnv1a64(std::string(to_string(train.variant)), model.hash());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (!ckpt.params.layout) throw Error("invalid-argument", "checkpoint has no parameters");
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u64(ckpt.config_hash());
  w.str(json{{"model", ckpt.model.to_json()}, {"train", ckpt.train.to_json()}}.dump());
  w.u32(static_cast<std::uint32_t>(ckpt.mel_norm.min.size()));
  for (float v : ckpt.mel_norm.min) w.f32(v);
  for (float v : ckpt.mel_norm.max) w.f32(v);

  const auto& blocks = ckpt.params.layout->blocks();
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    w.str(b.name);
    w.u32(static_cast<std::uint32_t>(b.rows));
    w.u32(static_cast<std::uint32_t>(b.cols));
    w.raw(ckpt.params.values.data() + b.offset, b.size() * sizeof(float));
  }
  w.u64(static_cast<std::uint64_t>(ckpt.step));
  w.u32(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    w.u64(static_cast<std::uint64_t>(ckpt.optimizer->iterations));
    w.raw(ckpt.optimizer->m.data(), ckpt.optimizer->m.size() * sizeof(double));
    w.raw(ckpt.optimizer->v.data(), ckpt.optimizer->v.size() * sizeof(double));
  }
  w.str(ckpt.rng_state);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io-error", "cannot write " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw Error("io-error", "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error("parse-error", "not a checkpoint file");
  if (r.u32() != kVersion) throw Error("parse-error", "unsupported checkpoint version");
  const std::uint64_t stored_hash = r.u64();

  Checkpoint ckpt;
  json meta;
  try {
    meta = json::parse(r.str());
  } catch (const json::exception& e) {
    throw Error("parse-error", std::string("checkpoint config: ") + e.what());
  }
  ckpt.model = ModelConfig::from_json(meta.at("model"));
  ckpt.train = TrainConfig::from_json(meta.at("train"));
  if (ckpt.config_hash() != stored_hash)
    throw Error("config-mismatch", "checkpoint config hash does not match its config");

  const auto bins = r.u32();
  ckpt.mel_norm.min.resize(bins);
  ckpt.mel_norm.max.resize(bins);
  for (auto& v : ckpt.mel_norm.min) v = r.f32();
  for (auto& v : ckpt.mel_norm.max) v = r.f32();

  auto layout = std::make_shared<const ParamLayout>(ckpt.model);
  ckpt.params = Params<float>(layout);
  const auto count = r.u32();
  if (count != layout->blocks().size())
    throw Error("config-mismatch", "checkpoint block count differs from config");
  for (const auto& b : layout->blocks()) {
    const std::string name = r.str();
    const auto rows = r.u32(), cols = r.u32();
    if (name != b.name || static_cast<int>(rows) != b.rows || static_cast<int>(cols) != b.cols)
      throw Error("config-mismatch", "checkpoint block '" + name + "' does not match layout");
    r.raw(ckpt.params.values.data() + b.offset, b.size() * sizeof(float));
  }
  ckpt.step = static_cast<long long>(r.u64());
  if (r.u32() == 1) {
    OptimizerState s;
    s.iterations = static_cast<long long>(r.u64());
    s.m.resize(layout->total());
    s.v.resize(layout->total());
    r.raw(s.m.data(), s.m.size() * sizeof(double));
    r.raw(s.v.data(), s.v.size() * sizeof(double));
    ckpt.optimizer = std::move(s);
  }
  ckpt.rng_state = r.str();
  if (!r.done()) throw Error("parse-error", "trailing bytes in checkpoint");
  return ckpt;
}

void require_content_source(const Checkpoint& ckpt, ContentSource expected) {
  if (ckpt.model.content != expected)
    throw Error("config-mismatch",
                std::string("checkpoint was trained for ") + to_string(ckpt.train.variant) +
                    (expected == ContentSource::LocalAudio
                         ? "; conversion without lyrics needs an svc-c checkpoint"
                         : "; this path needs an svs/svc-b checkpoint"));
}

}  // namespace zs
