#include "zerosing/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "zerosing/embeddings.hpp"
#include "zerosing/error.hpp"
#include "zerosing/features.hpp"

namespace zs {

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j{{"mel_l1", mel_l1}, {"vuv_error", vuv_error}, {"frames", frames}};
  j["f0_rmse_cents"] = f0_rmse_cents ? nlohmann::json(*f0_rmse_cents) : nlohmann::json(nullptr);
  j["timbre_cos"] = timbre_cos ? nlohmann::json(*timbre_cos) : nlohmann::json(nullptr);
  return j;
}

MetricsReport evaluate(const AudioBuffer& ref, const AudioBuffer& hyp) {
  const SpectralConfig config;
  if (ref.size() < static_cast<std::size_t>(config.win) ||
      hyp.size() < static_cast<std::size_t>(config.win))
    throw Error("too-short", "audio shorter than one analysis window");
  const MelSpectrogram a = mel_spectrogram(ref, config);
  const MelSpectrogram b = mel_spectrogram(hyp, config);
  const Eigen::Index T = std::min(a.num_frames(), b.num_frames());

  MetricsReport r;
  r.frames = static_cast<int>(T);
  r.mel_l1 = (a.frames.topRows(T) - b.frames.topRows(T)).cwiseAbs().mean();

  const F0Curve fa = extract_f0(ref, DomainMode::Singing, config);
  const F0Curve fb = extract_f0(hyp, DomainMode::Singing, config);
  double sq = 0.0;
  int joint = 0, disagree = 0;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (fa.voiced[t] != fb.voiced[t]) ++disagree;
    if (fa.voiced[t] && fb.voiced[t]) {
      const double cents = 1200.0 * std::log2(fb.values_hz[t] / fa.values_hz[t]);
      sq += cents * cents;
      ++joint;
    }
  }
  r.vuv_error = static_cast<double>(disagree) / static_cast<double>(T);
  if (joint > 0) r.f0_rmse_cents = std::sqrt(sq / joint);
  if (ref.duration_s() >= 1.0 && hyp.duration_s() >= 1.0)
    r.timbre_cos = cosine_similarity(timbre_embed(ref, config).vector, timbre_embed(hyp, config).vector);
  return r;
}

}  // namespace zs
