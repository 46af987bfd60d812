#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "zerosing/error.hpp"
#include "zerosing/model.hpp"
#include "zerosing/random.hpp"

namespace zs {

/// Linear beta schedule, 1-based: beta(1) .. beta(T).
class NoiseSchedule {
 public:
  NoiseSchedule(int num_steps, double beta_start, double beta_end);

  int num_steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(t - 1); }
  double alpha(int t) const { return 1.0 - beta(t); }
  /// alpha_bar(0) = 1 by convention.
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars_.at(t - 1); }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

/// Throws "invalid-config" unless 0 < start < end < 1 and T >= 2.
NoiseSchedule make_schedule(int num_steps = 1000, double beta_start = 1e-4,
                            double beta_end = 2e-2);

template <class S>
Mat<S> gaussian_like(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat<S> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<S>(dist(rng));
  return m;
}

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
template <class S>
Mat<S> q_sample(const Mat<S>& x0, int t, const Mat<S>& eps, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.num_steps())
    throw Error("invalid-argument", "q_sample: step out of range");
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols())
    throw Error("shape-mismatch", "q_sample: eps shape differs from x0");
  const double ab = schedule.alpha_bar(t);
  return static_cast<S>(std::sqrt(ab)) * x0 + static_cast<S>(std::sqrt(1.0 - ab)) * eps;
}

/// Denoiser callback: eps_hat for (x_t, t).
template <class S>
using Denoiser = std::function<Mat<S>(const Mat<S>&, int)>;

/// Ancestral sampler from x_T ~ N(0, I).
template <class S>
Mat<S> ddpm_sample(const Denoiser<S>& denoise, Eigen::Index rows, Eigen::Index cols,
                   const NoiseSchedule& schedule, Rng& rng) {
  Mat<S> x = gaussian_like<S>(rows, cols, rng);
  for (int t = schedule.num_steps(); t >= 1; --t) {
    const Mat<S> eps = denoise(x, t);
    const double beta = schedule.beta(t);
    const double ab = schedule.alpha_bar(t);
    const double coef = beta / std::sqrt(1.0 - ab);
    Mat<S> mean = (x - static_cast<S>(coef) * eps) / static_cast<S>(std::sqrt(schedule.alpha(t)));
    if (t > 1) {
      const double var = beta * (1.0 - schedule.alpha_bar(t - 1)) / (1.0 - ab);
      mean += static_cast<S>(std::sqrt(var)) * gaussian_like<S>(rows, cols, rng);
    }
    x = std::move(mean);
  }
  return x;
}

/// Evenly spaced DDIM step subsequence, ascending, ending at T.
std::vector<int> ddim_timesteps(int num_steps, int inference_steps);

/// DDIM from a given x_T. eta = 0 makes this a pure function of its inputs.
template <class S>
Mat<S> ddim_sample_from(const Denoiser<S>& denoise, Mat<S> x, const NoiseSchedule& schedule,
                        int inference_steps, double eta, Rng& rng) {
  const auto steps = ddim_timesteps(schedule.num_steps(), inference_steps);
  if (eta < 0.0) throw Error("invalid-argument", "ddim: eta must be >= 0");
  for (int i = static_cast<int>(steps.size()) - 1; i >= 0; --i) {
    const int t = steps[i];
    const int t_prev = i > 0 ? steps[i - 1] : 0;
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t_prev);
    const Mat<S> eps = denoise(x, t);
    const Mat<S> x0_hat =
        (x - static_cast<S>(std::sqrt(1.0 - ab)) * eps) / static_cast<S>(std::sqrt(ab));
    const double sigma =
        eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
    const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
    Mat<S> next = static_cast<S>(std::sqrt(ab_prev)) * x0_hat + static_cast<S>(dir) * eps;
    if (sigma > 0.0)
      next += static_cast<S>(sigma) * gaussian_like<S>(x.rows(), x.cols(), rng);
    x = std::move(next);
  }
  return x;
}

template <class S>
Mat<S> ddim_sample(const Denoiser<S>& denoise, Eigen::Index rows, Eigen::Index cols,
                   const NoiseSchedule& schedule, int inference_steps, double eta, Rng& rng) {
  Mat<S> x_T = gaussian_like<S>(rows, cols, rng);
  return ddim_sample_from<S>(denoise, std::move(x_T), schedule, inference_steps, eta, rng);
}

/// One training pair: normalized target mel plus its conditioning.
template <class S>
struct TrainExample {
  Mat<S> x0;  // n_mels x T
  ModelInput<S> input;
};

/// Diffusion step and noise used for one example.
template <class S>
struct NoiseDraw {
  int t;
  Mat<S> eps;
};

/// Uniform t in [1, T] and standard normal eps per example.
template <class S>
std::vector<NoiseDraw<S>> draw_noise(std::span<const TrainExample<S>> batch,
                                     const NoiseSchedule& schedule, Rng& rng);

/// Mean squared eps-prediction error over every element of the batch.
/// With `grad` non-null, accumulates d(loss)/d(params) into it.
template <class S>
S diffusion_loss(const Params<S>& params, std::span<const TrainExample<S>> batch,
                 std::span<const NoiseDraw<S>> draws, const NoiseSchedule& schedule,
                 Params<S>* grad);

/// Draws noise from rng, then returns the loss and fills grad (zeroed first).
template <class S>
S loss_and_grad(const Params<S>& params, std::span<const TrainExample<S>> batch,
                const NoiseSchedule& schedule, Rng& rng, Params<S>& grad);

/// Adam with bias correction.
class Adam {
 public:
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(std::span<float> params, std::span<const float> grad);
  long long iterations() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(long long t, std::vector<double> m, std::vector<double> v);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

// ---------------------------------------------------------------- gradcheck

struct BlockCheck {
  std::string block;
  double max_relative_error;
};

struct GradCheckReport {
  std::vector<BlockCheck> blocks;
  double max_relative_error = 0.0;
  bool passed(double tol = 1e-4) const { return max_relative_error < tol; }
};

/// Central finite differences (64-bit) against the analytic gradient on a
/// random small-shape model and batch: per block, one random direction plus
/// the largest-magnitude coordinates.
GradCheckReport gradient_check(const ModelConfig& config, std::uint64_t seed,
                               double step = 1e-5);

}  // namespace zs
