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

#include "altdiff/e2e.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "altdiff/bench.hpp"
#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff::e2e {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kScale = 100.0;

std::size_t ParamCount(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
  return n;
}

// Per-sample scratch for one prediction, solve and gradient.
struct StepResult {
  double loss = 0.0;
  std::size_t iterations = 0;
  Vector grad_theta;
  Vector grad_params;
};

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }


StepResult EvaluateSample(const Mlp& mlp, const Sample& s, const Vector& x_true,
                          const TrainConfig& cfg, double eps, bool want_grad) {
  const Vector theta = Forecast(mlp, s.history);
  const ProblemSpec p = EnergyProblem(theta, cfg.ramp);
  SolverConfig solver = cfg.solver;
  solver.eps = eps;
  const DiffReport rep = Differentiate(p, LinearCost{}, solver);
  StepResult out;
  out.loss = SpoLoss(rep.forward.state.x, x_true);
  out.iterations = rep.forward.state.k;
  if (want_grad) {
    out.grad_theta = SpoGradTheta(rep, x_true);
    out.grad_params = ForecastParamGrad(mlp, s.history, out.grad_theta);
  }
  return out;
}

std::vector<Vector> Truths(const std::vector<Sample>& data, const TrainConfig& cfg) {
  SolverConfig solver = cfg.solver;
  solver.eps = cfg.truth_eps;
  solver.max_outer_iters = std::max<std::size_t>(solver.max_outer_iters, 100000);
  std::vector<Vector> out;
  out.reserve(data.size());
  for (const Sample& s : data) {
    out.push_back(AdmmSolve(EnergyProblem(s.target, cfg.ramp), solver).state.x);
  }
  return out;
}

std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed * 1000003ULL + epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

ProblemSpec EnergyProblem(std::span<const double> demand, double ramp) {
  const std::size_t t = demand.size();
  if (t < 2) throw Error(ErrorCode::kDimensionMismatch, "need at least two time slots");
  if (!(ramp > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ramp limit must be > 0");
  DenseMatrix P(t, t);
  for (std::size_t i = 0; i < t; ++i) P(i, i) = 2.0;
  const std::size_t m = t - 1;
  DenseMatrix G(2 * m, t);
  for (std::size_t k = 0; k < m; ++k) {
    G(k, k + 1) = 1.0;
    G(k, k) = -1.0;
    G(m + k, k) = 1.0;
    G(m + k, k + 1) = -1.0;
  }
  return ProblemSpec{t, QuadraticObjective{std::move(P), Scaled(demand, -2.0)},
                     Polyhedron{DenseMatrix(0, t), {}, std::move(G), Vector(2 * m, ramp)}};
}

double SpoLoss(std::span<const double> x_hat, std::span<const double> x_true) {
  RequireSameSize(x_hat.size(), x_true.size(), "spo loss");
  const double d = Distance2(x_hat, x_true);
  return 0.5 * d * d;
}

Vector SpoGradTheta(const DiffReport& report, std::span<const double> x_true) {
  const Vector& x = report.forward.state.x;
  RequireSameSize(x.size(), x_true.size(), "spo gradient");
  return Scaled(Vjp(report, Subtract(x, x_true)), -2.0);
}

Mlp::Mlp(std::vector<std::size_t> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need input and output");
  for (std::size_t s : sizes_) {
    if (s == 0) throw Error(ErrorCode::kInvalidArgument, "layer widths must be positive");
  }
  params_.assign(ParamCount(sizes_), 0.0);
  std::mt19937_64 rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in)));
    for (std::size_t i = 0; i < in * out; ++i) params_[off + i] = normal(rng);
    off += in * out + out;
  }
}

Vector Mlp::Forward(std::span<const double> input) const {
  RequireSameSize(input.size(), sizes_.front(), "mlp input");
  Vector a(input.begin(), input.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const DenseMatrix w(out, in, Vector(params_.begin() + off, params_.begin() + off + in * out));
    Vector z = Matvec(w, a);
    for (std::size_t i = 0; i < out; ++i) z[i] += params_[off + in * out + i];
    if (l + 2 < sizes_.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    a = std::move(z);
    off += in * out + out;
  }
  return a;
}

Vector Mlp::Backward(std::span<const double> input, std::span<const double> dL_dout) const {
  RequireSameSize(input.size(), sizes_.front(), "mlp input");
  RequireSameSize(dL_dout.size(), sizes_.back(), "mlp output gradient");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<Vector> acts{Vector(input.begin(), input.end())};
  std::vector<DenseMatrix> weights;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    weights.emplace_back(out, in,
                         Vector(params_.begin() + off, params_.begin() + off + in * out));
    offsets.push_back(off);
    Vector z = Matvec(weights.back(), acts.back());
    for (std::size_t i = 0; i < out; ++i) z[i] += params_[off + in * out + i];
    if (l + 1 < layers) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    acts.push_back(std::move(z));
    off += in * out + out;
  }
  Vector grads(params_.size(), 0.0);
  Vector delta(dL_dout.begin(), dL_dout.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    if (l + 1 < layers) {
      // ReLU mask from the stored post-activation.
      for (std::size_t i = 0; i < out; ++i) {
        if (!(acts[l + 1][i] > 0.0)) delta[i] = 0.0;
      }
    }
    const Vector& a = acts[l];
    double* gw = grads.data() + offsets[l];
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t j = 0; j < in; ++j) gw[i * in + j] = delta[i] * a[j];
      gw[in * out + i] = delta[i];
    }
    if (l > 0) delta = MatvecT(weights[l], delta);
  }
  return grads;
}

Mlp DemandPredictor(std::uint64_t seed) {
  Mlp mlp({kHistory, 128, 64, kHorizon}, seed);
  // Shrunk output layer: the untrained forecast starts near flat mid-range.
  Vector& w = mlp.params();
  const std::size_t out_w = 64 * kHorizon;
  const std::size_t off = w.size() - out_w - kHorizon;
  for (std::size_t i = 0; i < out_w; ++i) w[off + i] *= 0.1;
  return mlp;
}

Vector Forecast(const Mlp& mlp, std::span<const double> history) {
  Vector out = mlp.Forward(Scaled(history, 1.0 / kScale));
  for (double& v : out) v = kScale * Sigmoid(v);
  return out;
}

Vector ForecastParamGrad(const Mlp& mlp, std::span<const double> history,
                         std::span<const double> dL_dforecast) {
  const Vector theta = Forecast(mlp, history);
  RequireSameSize(dL_dforecast.size(), theta.size(), "forecast gradient");
  // d theta / d z = 100 s (1 - s) = theta (1 - theta / 100)
  Vector dz(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    dz[i] = dL_dforecast[i] * theta[i] * (1.0 - theta[i] / kScale);
  }
  return mlp.Backward(Scaled(history, 1.0 / kScale), dz);
}

AdamState AdamState::For(std::size_t n_params) {
  AdamState s;
  s.m.assign(n_params, 0.0);
  s.v.assign(n_params, 0.0);
  return s;
}

void AdamStep(AdamState& state, std::span<double> params, std::span<const double> grads,
              double lr) {
  RequireSameSize(params.size(), grads.size(), "adam gradients");
  RequireSameSize(state.m.size(), params.size(), "adam first moment");
  RequireSameSize(state.v.size(), params.size(), "adam second moment");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

std::vector<Sample> SynthDemand(std::uint64_t seed, std::size_t days) {
  if (days < 4) throw Error(ErrorCode::kInvalidArgument, "need at least 4 days");
  const std::size_t hours = days * 24;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double week_phase = phase(rng);
  Vector series(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    const double t = static_cast<double>(h);
    const double hod = static_cast<double>(h % 24);
    // Daytime plateau with a steep morning rise (peak slope 20/h) and a
    // softer evening fall.
    const double day = Sigmoid((hod - 7.0) / 0.5) - Sigmoid((hod - 20.0) / 0.8);
    const double v = 30.0 + 40.0 * day +
                     8.0 * std::sin(2.0 * std::numbers::pi * t / 168.0 + week_phase) +
                     noise(rng);
    series[h] = std::clamp(v, 0.0, 100.0);
  }
  const std::size_t window = kHistory + kHorizon;
  std::vector<Sample> out;
  for (std::size_t start = 0; start + window <= hours; ++start) {
    Sample s;
    s.history.assign(series.begin() + start, series.begin() + start + kHistory);
    s.target.assign(series.begin() + start + kHistory, series.begin() + start + window);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TrainLogRow> Train(const std::vector<Sample>& data, const TrainConfig& cfg,
                               std::span<const double> tolerances) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  const std::vector<Vector> truths = Truths(data, cfg);
  std::vector<TrainLogRow> log;
  for (double tol : tolerances) {
    Mlp mlp = DemandPredictor(cfg.seed);
    AdamState adam = AdamState::For(mlp.params().size());
    for (std::size_t epoch = 0; epoch <= cfg.epochs; ++epoch) {
      const auto start = Clock::now();
      TrainLogRow row;
      row.epoch = epoch;
      row.tolerance = tol;
      double loss = 0.0;
      double iters = 0.0;
      const bool update = epoch > 0;
      try {
        for (std::size_t idx : EpochOrder(data.size(), cfg.seed, epoch)) {
          const StepResult r = EvaluateSample(mlp, data[idx], truths[idx], cfg, tol, update);
          loss += r.loss;
          iters += static_cast<double>(r.iterations);
          if (update) AdamStep(adam, mlp.params(), r.grad_params, cfg.lr);
        }
      } catch (const Error& e) {
        row.error = e.what();
      }
      const double n = static_cast<double>(data.size());
      row.mean_loss = loss / n;
      row.mean_solver_iters = iters / n;
      row.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      log.push_back(row);
      if (!row.error.empty()) break;
    }
  }
  return log;
}

GradientAgreement CompareGradients(const std::vector<Sample>& data, const TrainConfig& cfg,
                                   double loose_eps, double reference_eps,
                                   std::size_t steps) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  Mlp mlp = DemandPredictor(cfg.seed);
  AdamState adam = AdamState::For(mlp.params().size());
  GradientAgreement out;
  std::size_t epoch = 1;
  std::vector<std::size_t> order = EpochOrder(data.size(), cfg.seed, epoch);
  std::size_t pos = 0;
  SolverConfig truth_cfg = cfg.solver;
  truth_cfg.eps = cfg.truth_eps;
  truth_cfg.max_outer_iters = std::max<std::size_t>(truth_cfg.max_outer_iters, 100000);
  for (std::size_t step = 0; step < steps; ++step) {
    if (pos == order.size()) {
      order = EpochOrder(data.size(), cfg.seed, ++epoch);
      pos = 0;
    }
    const Sample& s = data[order[pos++]];
    const Vector x_true = AdmmSolve(EnergyProblem(s.target, cfg.ramp), truth_cfg).state.x;
    const StepResult loose = EvaluateSample(mlp, s, x_true, cfg, loose_eps, true);
    const StepResult ref = EvaluateSample(mlp, s, x_true, cfg, reference_eps, true);
    out.param_cosine.push_back(CosineSimilarity(loose.grad_params, ref.grad_params));
    out.theta_cosine.push_back(CosineSimilarity(loose.grad_theta, ref.grad_theta));
    AdamStep(adam, mlp.params(), ref.grad_params, cfg.lr);
  }
  const double n = static_cast<double>(std::max<std::size_t>(steps, 1));
  for (double c : out.param_cosine) out.mean_param_cosine += c / n;
  for (double c : out.theta_cosine) out.mean_theta_cosine += c / n;
  return out;
}

void WriteTrainLog(std::ostream& out, const std::vector<TrainLogRow>& rows) {
  bench::CsvTable t;
  t.header = {"epoch", "tolerance", "mean_loss", "mean_solver_iters", "wall_time_ms"};
  for (const TrainLogRow& r : rows) {
    t.rows.push_back({std::to_string(r.epoch), bench::FormatDouble(r.tolerance),
                      bench::FormatDouble(r.mean_loss), bench::FormatDouble(r.mean_solver_iters),
                      bench::FormatDouble(r.wall_time_ms)});
  }
  bench::WriteCsv(out, t);
}

}  // namespace altdiff::e2e
