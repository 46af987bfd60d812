#include "zerosing/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zs {

NoiseSchedule::NoiseSchedule(int num_steps, double beta_start, double beta_end) {
  if (num_steps < 2 || !(beta_start > 0.0) || !(beta_start < beta_end) || !(beta_end < 1.0))
    throw Error("invalid-config", "noise schedule needs T >= 2 and 0 < start < end < 1");
  betas_.resize(num_steps);
  alpha_bars_.resize(num_steps);
  double prod = 1.0;
  for (int t = 1; t <= num_steps; ++t) {
    const double beta =
        beta_start + static_cast<double>(t - 1) / (num_steps - 1) * (beta_end - beta_start);
    betas_[t - 1] = beta;
    prod *= 1.0 - beta;
    alpha_bars_[t - 1] = prod;
  }
}

NoiseSchedule make_schedule(int num_steps, double beta_start, double beta_end) {
  return NoiseSchedule(num_steps, beta_start, beta_end);
}

std::vector<int> ddim_timesteps(int num_steps, int inference_steps) {
  if (inference_steps < 1 || inference_steps > num_steps)
    throw Error("invalid-argument", "DDIM steps must be in [1, T]");
  std::vector<int> steps(inference_steps);
  for (int i = 1; i <= inference_steps; ++i)
    steps[i - 1] = static_cast<int>(
        std::lround(static_cast<double>(num_steps) * i / inference_steps));
  return steps;
}

template <class S>
std::vector<NoiseDraw<S>> draw_noise(std::span<const TrainExample<S>> batch,
                                     const NoiseSchedule& schedule, Rng& rng) {
  std::vector<NoiseDraw<S>> draws;
  draws.reserve(batch.size());
  std::uniform_int_distribution<int> step_dist(1, schedule.num_steps());
  for (const auto& ex : batch) {
    const int t = step_dist(rng);
    draws.push_back({t, gaussian_like<S>(ex.x0.rows(), ex.x0.cols(), rng)});
  }
  return draws;
}

template <class S>
S diffusion_loss(const Params<S>& params, std::span<const TrainExample<S>> batch,
                 std::span<const NoiseDraw<S>> draws, const NoiseSchedule& schedule,
                 Params<S>* grad) {
  if (batch.empty()) throw Error("invalid-argument", "empty batch");
  if (draws.size() != batch.size())
    throw Error("shape-mismatch", "one noise draw per example required");
  double elements = 0.0;
  for (const auto& ex : batch) elements += static_cast<double>(ex.x0.size());
  const S scale = static_cast<S>(2.0 / elements);

  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    const auto& draw = draws[i];
    const Mat<S> x_t = q_sample<S>(ex.x0, draw.t, draw.eps, schedule);
    Mat<S> eps_hat;
    if (grad) {
      eps_hat = predict_noise_backward<S>(
          params, x_t, draw.t, ex.input,
          [&](const Mat<S>& out) -> Mat<S> { return scale * (out - draw.eps); }, *grad);
    } else {
      eps_hat = predict_noise<S>(params, x_t, draw.t, ex.input);
    }
    total += static_cast<double>((eps_hat - draw.eps).squaredNorm());
  }
  return static_cast<S>(total / elements);
}

template <class S>
S loss_and_grad(const Params<S>& params, std::span<const TrainExample<S>> batch,
                const NoiseSchedule& schedule, Rng& rng, Params<S>& grad) {
  if (batch.empty()) throw Error("invalid-argument", "empty batch");
  const auto draws = draw_noise<S>(batch, schedule, rng);
  grad = Params<S>(params.layout);
  return diffusion_loss<S>(params, batch, std::span<const NoiseDraw<S>>(draws), schedule,
                           &grad);
}

template std::vector<NoiseDraw<float>> draw_noise<float>(std::span<const TrainExample<float>>,
                                                         const NoiseSchedule&, Rng&);
template std::vector<NoiseDraw<double>> draw_noise<double>(
    std::span<const TrainExample<double>>, const NoiseSchedule&, Rng&);
template float diffusion_loss<float>(const Params<float>&, std::span<const TrainExample<float>>,
                                     std::span<const NoiseDraw<float>>, const NoiseSchedule&,
                                     Params<float>*);
template double diffusion_loss<double>(const Params<double>&,
                                       std::span<const TrainExample<double>>,
                                       std::span<const NoiseDraw<double>>,
                                       const NoiseSchedule&, Params<double>*);
template float loss_and_grad<float>(const Params<float>&, std::span<const TrainExample<float>>,
                                    const NoiseSchedule&, Rng&, Params<float>&);
template double loss_and_grad<double>(const Params<double>&,
                                      std::span<const TrainExample<double>>,
                                      const NoiseSchedule&, Rng&, Params<double>&);

// ---------------------------------------------------------------- Adam

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(size, 0.0), v_(size, 0.0) {
  if (!(lr > 0.0)) throw Error("invalid-config", "learning rate must be positive");
}

void Adam::step(std::span<float> params, std::span<const float> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw Error("shape-mismatch", "Adam state size differs from parameters");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double update = lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
    params[i] = static_cast<float>(params[i] - update);
  }
}

void Adam::restore(long long t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw Error("shape-mismatch", "Adam state size differs");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

// ---------------------------------------------------------------- gradcheck

namespace {

std::vector<TrainExample<double>> random_batch(const ModelConfig& c, Rng& rng) {
  std::vector<TrainExample<double>> batch;
  std::uniform_int_distribution<int> frames_dist(5, 12);
  std::uniform_int_distribution<int> phone_dist(0, c.num_phonemes - 1);
  std::uniform_int_distribution<int> style_dist(0, c.num_styles - 1);
  for (int i = 0; i < 2; ++i) {
    const int T = frames_dist(rng);
    TrainExample<double> ex;
    ex.x0 = gaussian_like<double>(c.n_mels, T, rng);
    ex.input.frame_features = gaussian_like<double>(kFrameFeatures, T, rng);
    if (c.content == ContentSource::Lyrics) {
      for (int f = 0; f < T; ++f) {
        ex.input.phone_ids.push_back(phone_dist(rng));
        ex.input.phone_position.push_back(uniform01(rng));
      }
    } else {
      ex.input.content = gaussian_like<double>(c.content_dim, T, rng);
    }
    ex.input.timbre = gaussian_like<double>(c.timbre_dim, 1, rng).col(0);
    ex.input.pitch_template = gaussian_like<double>(c.n_mels, T, rng);
    ex.input.style = style_dist(rng);
    batch.push_back(std::move(ex));
  }
  return batch;
}

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-10});
  return std::abs(a - b) / denom;
}

}  // namespace

GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed, double step) {
  Rng rng(derive_seed(seed, "gradcheck"));
  auto layout = std::make_shared<const ParamLayout>(config);
  Params<double> params = init_params<double>(layout, derive_seed(seed, "params"));
  // Move every block away from its initial zeros so each path is exercised.
  for (auto& v : params.values) v += 0.3 * standard_normal(rng);

  const auto batch = random_batch(config, rng);
  const NoiseSchedule schedule(config.diffusion_steps, config.beta_start, config.beta_end);
  const auto draws = draw_noise<double>(batch, schedule, rng);
  const std::span<const TrainExample<double>> bspan(batch);
  const std::span<const NoiseDraw<double>> dspan(draws);

  Params<double> grad(layout);
  diffusion_loss<double>(params, bspan, dspan, schedule, &grad);
  auto loss_at = [&](const Params<double>& p) {
    return diffusion_loss<double>(p, bspan, dspan, schedule, nullptr);
  };

  GradCheckReport report;
  for (const auto& block : layout->blocks()) {
    double worst = 0.0;
    // Random direction restricted to the block.
    std::vector<double> dir(block.size());
    double analytic = 0.0;
    for (std::size_t k = 0; k < dir.size(); ++k) {
      dir[k] = standard_normal(rng);
      analytic += dir[k] * grad.values[block.offset + k];
    }
    Params<double> plus = params, minus = params;
    for (std::size_t k = 0; k < dir.size(); ++k) {
      plus.values[block.offset + k] += step * dir[k];
      minus.values[block.offset + k] -= step * dir[k];
    }
    const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
    worst = std::max(worst, relative_error(analytic, numeric));

    // Largest-magnitude coordinates.
    std::vector<std::size_t> order(block.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min<std::size_t>(3, order.size());
    std::partial_sort(order.begin(), order.begin() + top, order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return std::abs(grad.values[block.offset + a]) >
                               std::abs(grad.values[block.offset + b]);
                      });
    for (std::size_t r = 0; r < top; ++r) {
      const std::size_t idx = block.offset + order[r];
      if (grad.values[idx] == 0.0) continue;  // e.g. unused phoneme rows
      Params<double> p1 = params, p2 = params;
      p1.values[idx] += step;
      p2.values[idx] -= step;
      const double fd = (loss_at(p1) - loss_at(p2)) / (2.0 * step);
      worst = std::max(worst, relative_error(grad.values[idx], fd));
    }
    report.blocks.push_back({block.name, worst});
    report.max_relative_error = std::max(report.max_relative_error, worst);
  }
  return report;
}

}  // namespace zs
