#pragma once

#include <optional>

#include <json.hpp>

#include "zerosing/dsp.hpp"

namespace zs {

/// Objective comparison of a hypothesis against a reference recording. Frame
/// metrics use the common prefix when lengths differ.
struct MetricsReport {
  double mel_l1 = 0.0;
  std::optional<double> f0_rmse_cents;  // absent when no frame is voiced in both
  double vuv_error = 0.0;
  std::optional<double> timbre_cos;     // absent when either clip is under 1 s
  int frames = 0;

  nlohmann::json to_json() const;
};

MetricsReport evaluate(const AudioBuffer& ref, const AudioBuffer& hyp);

}  // namespace zs
