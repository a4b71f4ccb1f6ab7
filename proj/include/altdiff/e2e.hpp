// Copyright 2026 The altdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "altdiff/backward.hpp"
#include "altdiff/forward.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

// Predict-then-optimize energy scheduling: an MLP predicts tomorrow's hourly
// demand, a ramp-limited generation schedule is fit to the prediction, and
// the predictor is trained on the quality of that schedule.
namespace altdiff::e2e {

inline constexpr std::size_t kHorizon = 24;
inline constexpr std::size_t kHistory = 72;

// min sum_k (x_k - d_k)^2 s.t. |x_{k+1} - x_k| <= r, i.e. P = 2I, q = -2d,
// G = [D; -D] with D the forward difference, h = r. Throws
// Error(kDimensionMismatch) for fewer than two slots, Error(kInvalidArgument)
// for r <= 0.
ProblemSpec EnergyProblem(std::span<const double> demand, double ramp);

// 1/2 ||x_hat - x_true||^2
double SpoLoss(std::span<const double> x_hat, std::span<const double> x_true);

// Gradient of SpoLoss with respect to the predicted demand, from a report
// differentiated with LinearCost on EnergyProblem(prediction, r). The cost
// is q = -2 * prediction, hence the factor -2.
Vector SpoGradTheta(const DiffReport& report, std::span<const double> x_true);

// Fully connected ReLU network; parameters stored flat, layer by layer as
// W (out x in, row-major) then b.
class Mlp {
 public:
  // He-normal weights, zero biases.
  Mlp(std::vector<std::size_t> sizes, std::uint64_t seed);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  Vector& params() noexcept { return params_; }
  const Vector& params() const noexcept { return params_; }

  Vector Forward(std::span<const double> input) const;
  // Gradient of <dL_dout, Forward(input)> with respect to params().
  Vector Backward(std::span<const double> input, std::span<const double> dL_dout) const;

 private:
  std::vector<std::size_t> sizes_;
  Vector params_;
};

// 72 -> 128 -> 64 -> 24 with a shrunk output layer. Training maps it to a
// forecast as 100 * sigmoid(mlp(history / 100)), which keeps predicted demand
// inside [0, 100].
Mlp DemandPredictor(std::uint64_t seed);

// 100 * sigmoid(mlp(history / 100))
Vector Forecast(const Mlp& mlp, std::span<const double> history);
// Pulls dL/dforecast back to dL/dparams.
Vector ForecastParamGrad(const Mlp& mlp, std::span<const double> history,
                         std::span<const double> dL_dforecast);

struct AdamState {
  Vector m;
  Vector v;
  std::size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState For(std::size_t n_params);
};

// Bias-corrected Adam update of `params` in place.
void AdamStep(AdamState& state, std::span<double> params, std::span<const double> grads,
              double lr);

struct Sample {
  Vector history;  // kHistory hourly values
  Vector target;   // next kHorizon hours
};

// Seeded hourly series (daytime plateau with steep morning ramps, a weekly
// sinusoid and Gaussian noise, clipped to [0, 100]) cut into every
// (72 h, 24 h) window: days * 24 - 96 + 1 samples.
// Throws Error(kInvalidArgument) for fewer than 4 days.
std::vector<Sample> SynthDemand(std::uint64_t seed, std::size_t days);

struct TrainConfig {
  std::size_t epochs = 10;
  double lr = 1e-3;
  double ramp = 20.0;
  std::uint64_t seed = 0;  // weights and data order
  SolverConfig solver;     // eps replaced per tolerance
  double truth_eps = 1e-9;
};

struct TrainLogRow {
  std::size_t epoch = 0;  // 0 is the evaluation pass before any update
  double tolerance = 0.0;
  double mean_loss = 0.0;
  double mean_solver_iters = 0.0;
  double wall_time_ms = 0.0;
  std::string error;
};

// One training run per tolerance from identical initial weights and data
// order. A solver error ends that tolerance's run with a diagnostic row.
std::vector<TrainLogRow> Train(const std::vector<Sample>& data, const TrainConfig& cfg,
                               std::span<const double> tolerances);

struct GradientAgreement {
  std::vector<double> param_cosine;  // per step, network parameter gradients
  std::vector<double> theta_cosine;  // per step, predicted-demand gradients
  double mean_param_cosine = 0.0;
  double mean_theta_cosine = 0.0;
};

// Follows the `reference_eps` training trajectory for `steps` updates and,
// at each step, compares the gradient computed at `loose_eps` with the one at
// `reference_eps` for the same weights and sample.
GradientAgreement CompareGradients(const std::vector<Sample>& data, const TrainConfig& cfg,
                                   double loose_eps, double reference_eps,
                                   std::size_t steps);

void WriteTrainLog(std::ostream& out, const std::vector<TrainLogRow>& rows);

}  // namespace altdiff::e2e
