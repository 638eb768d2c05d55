// Copyright 2026 The lnecg Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Two-player game definitions. A GameProblem exposes the generator loss
// L_G(theta, w), the discriminator loss L_D(theta, w), their exact gradients
// in the player's own variable and minibatch estimates of those gradients.
// Both players descend on their own loss.

#ifndef LNECG_GAMES_HPP_
#define LNECG_GAMES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lnecg/core.hpp"

namespace lnecg {

// Sample indices for one stochastic gradient evaluation. `noise_key` seeds
// any additive perturbation a problem applies on top of subsampling.
struct MiniBatch {
  std::vector<std::size_t> indices;
  std::uint64_t noise_key = 0;

  std::size_t size() const { return indices.size(); }
};

enum class SamplingMode {
  // Shuffle the dataset, hand out consecutive chunks, reshuffle when fewer
  // than m unused indices remain.
  kEpoch,
  // Fresh uniformly random m-subset every draw, independent across draws.
  kIid,
};

// Draws minibatches for one player. Owns its RNG; never shared across runs.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t dataset_size, std::size_t batch_size,
                   std::uint64_t seed, SamplingMode mode = SamplingMode::kEpoch)
      : dataset_size_(dataset_size),
        batch_size_(batch_size),
        mode_(mode),
        rng_(seed),
        perm_(dataset_size) {
    if (batch_size_ < 1 || dataset_size_ < 1) {
      throw UsageError("minibatch size and dataset size must be positive");
    }
    if (batch_size_ > dataset_size_) {
      throw UsageError("minibatch size " + std::to_string(batch_size_) +
                       " exceeds dataset size " +
                       std::to_string(dataset_size_));
    }
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    cursor_ = dataset_size_;  // forces a shuffle on first draw
  }

  MiniBatch Next() {
    MiniBatch batch;
    batch.indices.reserve(batch_size_);
    if (mode_ == SamplingMode::kEpoch) {
      if (dataset_size_ - cursor_ < batch_size_) {
        std::shuffle(perm_.begin(), perm_.end(), rng_);
        cursor_ = 0;
      }
      batch.indices.assign(perm_.begin() + cursor_,
                           perm_.begin() + cursor_ + batch_size_);
      cursor_ += batch_size_;
    } else {
      // Partial Fisher-Yates: the first m slots become a uniform m-subset.
      for (std::size_t i = 0; i < batch_size_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, dataset_size_ - 1);
        std::swap(perm_[i], perm_[pick(rng_)]);
      }
      batch.indices.assign(perm_.begin(), perm_.begin() + batch_size_);
    }
    batch.noise_key = rng_();
    return batch;
  }

  std::size_t dataset_size() const { return dataset_size_; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::size_t dataset_size_;
  std::size_t batch_size_;
  SamplingMode mode_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

inline MiniBatch sample_minibatch(MinibatchSampler& sampler) {
  return sampler.Next();
}

struct Equilibrium {
  ParameterVector theta;
  ParameterVector w;
};

class GameProblem {
 public:
  virtual ~GameProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim_theta() const = 0;
  virtual std::size_t dim_w() const = 0;
  // Number of samples minibatches index into.
  virtual std::size_t dataset_size() const = 0;

  virtual double loss_g(const ParameterVector& theta,
                        const ParameterVector& w) const = 0;
  virtual double loss_d(const ParameterVector& theta,
                        const ParameterVector& w) const = 0;

  // Exact gradients: nabla_theta L_G and nabla_w L_D.
  virtual ParameterVector full_grad_g(const ParameterVector& theta,
                                      const ParameterVector& w) const = 0;
  virtual ParameterVector full_grad_d(const ParameterVector& theta,
                                      const ParameterVector& w) const = 0;

  // Minibatch averages (1/m) sum_{i in batch} of the per-sample gradients.
  virtual ParameterVector grad_g(const ParameterVector& theta,
                                 const ParameterVector& w,
                                 const MiniBatch& batch) const = 0;
  virtual ParameterVector grad_d(const ParameterVector& theta,
                                 const ParameterVector& w,
                                 const MiniBatch& batch) const = 0;

  virtual std::optional<Equilibrium> known_lne() const { return std::nullopt; }

  // Starting point used when a run does not configure one.
  virtual Equilibrium default_start() const {
    return {ParameterVector::Zeros(dim_theta()), ParameterVector::Zeros(dim_w())};
  }

  MiniBatch FullBatch() const {
    MiniBatch b;
    b.indices.resize(dataset_size());
    std::iota(b.indices.begin(), b.indices.end(), std::size_t{0});
    return b;
  }

 protected:
  void CheckArgs(const ParameterVector& theta, const ParameterVector& w) const {
    internal::CheckSameDim(theta.dim(), dim_theta(), name() + " theta");
    internal::CheckSameDim(w.dim(), dim_w(), name() + " w");
  }
  void CheckBatch(const MiniBatch& batch) const {
    if (batch.indices.empty()) throw UsageError("empty minibatch");
    for (std::size_t i : batch.indices) {
      if (i >= dataset_size()) {
        throw UsageError("minibatch index " + std::to_string(i) +
                         " out of range for dataset of size " +
                         std::to_string(dataset_size()));
      }
    }
  }
};

inline ParameterVector minibatch_grad(const GameProblem& problem,
                                      PlayerRole role,
                                      const ParameterVector& theta,
                                      const ParameterVector& w,
                                      const MiniBatch& batch) {
  return role == PlayerRole::kGenerator ? problem.grad_g(theta, w, batch)
                                        : problem.grad_d(theta, w, batch);
}

// Partial derivatives of f(x, y) = (1 + x^2)(100 - y^2): (f_x, f_y).
inline std::pair<double, double> toy_grad(double x, double y) {
  return {2.0 * x * (100.0 - y * y), -2.0 * y * (1.0 + x * x)};
}

inline double toy_objective(double x, double y) {
  return (1.0 + x * x) * (100.0 - y * y);
}

// f(x, y) = (1 + x^2)(100 - y^2), x minimized by the generator and y
// maximized by the discriminator. The discriminator's loss is -f so that both
// players descend. Stationary equilibrium at (0, 0) with f = 100.
//
// With sigma > 0 each minibatch gradient gets independent N(0, sigma^2) noise
// keyed by the batch; sigma = 0 gives the deterministic problem.
class ToyGame final : public GameProblem {
 public:
  explicit ToyGame(double sigma = 0.0) : sigma_(sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw UsageError("toy noise sigma must be finite and >= 0");
    }
  }

  std::string name() const override { return "toy"; }
  std::size_t dim_theta() const override { return 1; }
  std::size_t dim_w() const override { return 1; }
  std::size_t dataset_size() const override { return 1; }
  double sigma() const { return sigma_; }

  double loss_g(const ParameterVector& theta,
                const ParameterVector& w) const override {
    CheckArgs(theta, w);
    return toy_objective(theta[0], w[0]);
  }
  double loss_d(const ParameterVector& theta,
                const ParameterVector& w) const override {
    CheckArgs(theta, w);
    return -toy_objective(theta[0], w[0]);
  }

  ParameterVector full_grad_g(const ParameterVector& theta,
                              const ParameterVector& w) const override {
    CheckArgs(theta, w);
    return ParameterVector{toy_grad(theta[0], w[0]).first};
  }
  ParameterVector full_grad_d(const ParameterVector& theta,
                              const ParameterVector& w) const override {
    CheckArgs(theta, w);
    return ParameterVector{-toy_grad(theta[0], w[0]).second};
  }

  ParameterVector grad_g(const ParameterVector& theta, const ParameterVector& w,
                         const MiniBatch& batch) const override {
    CheckBatch(batch);
    return Perturb(full_grad_g(theta, w), batch.noise_key, 0);
  }
  ParameterVector grad_d(const ParameterVector& theta, const ParameterVector& w,
                         const MiniBatch& batch) const override {
    CheckBatch(batch);
    return Perturb(full_grad_d(theta, w), batch.noise_key, 1);
  }

  std::optional<Equilibrium> known_lne() const override {
    return Equilibrium{ParameterVector{0.0}, ParameterVector{0.0}};
  }

  Equilibrium default_start() const override {
    return {ParameterVector{0.5}, ParameterVector{9.0}};
  }

 private:
  ParameterVector Perturb(ParameterVector g, std::uint64_t key,
                          std::uint64_t salt) const {
    if (sigma_ == 0.0) return g;
    std::mt19937_64 rng(key ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    std::normal_distribution<double> noise(0.0, sigma_);
    return ParameterVector{g[0] + noise(rng)};
  }

  double sigma_;
};

struct LinearQuadraticOptions {
  std::size_t dim_theta = 4;
  std::size_t dim_w = 4;
  std::size_t dataset_size = 64;
  std::uint64_t data_seed = 1;
};

namespace internal {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// `a` is row-major n x n.
inline std::vector<double> SolveDense(std::vector<double> a,
                                      std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (a[piv * n + col] == 0.0) throw NumericError("singular linear system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

}  // namespace internal

// Finite-sum game with per-sample losses
//   L_G^(i)(theta, w) = 1/2 |theta - xi_i|^2 + theta^T M w
//   L_D^(i)(theta, w) = 1/2 |w - zeta_i|^2 - theta^T M w.
// Gradients are affine in (theta, w), so both are Lipschitz. The stationary
// point solves theta + M w = mean(xi), w - M^T theta = mean(zeta).
//
// Data are regenerated from `data_seed`: M uniform on [-1/2, 1/2], samples
// standard normal.
class LinearQuadraticGame final : public GameProblem {
 public:
  explicit LinearQuadraticGame(LinearQuadraticOptions opts = {})
      : opts_(opts) {
    if (opts_.dim_theta < 1 || opts_.dim_w < 1 || opts_.dataset_size < 1) {
      throw UsageError("linear-quadratic game dimensions must be positive");
    }
    std::mt19937_64 rng(opts_.data_seed);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    coupling_.resize(opts_.dim_theta * opts_.dim_w);
    for (double& m : coupling_) m = unif(rng);
    xi_.resize(opts_.dataset_size * opts_.dim_theta);
    for (double& v : xi_) v = normal(rng);
    zeta_.resize(opts_.dataset_size * opts_.dim_w);
    for (double& v : zeta_) v = normal(rng);
    SolveEquilibrium();
  }

  std::string name() const override { return "lq"; }
  std::size_t dim_theta() const override { return opts_.dim_theta; }
  std::size_t dim_w() const override { return opts_.dim_w; }
  std::size_t dataset_size() const override { return opts_.dataset_size; }
  const LinearQuadraticOptions& options() const { return opts_; }

  // Row-major dim_theta x dim_w.
  double coupling(std::size_t r, std::size_t c) const {
    return coupling_[r * opts_.dim_w + c];
  }
  double xi(std::size_t i, std::size_t k) const {
    return xi_[i * opts_.dim_theta + k];
  }
  double zeta(std::size_t i, std::size_t k) const {
    return zeta_[i * opts_.dim_w + k];
  }

  double loss_g(const ParameterVector& theta,
                const ParameterVector& w) const override {
    CheckArgs(theta, w);
    CompensatedSum s;
    for (std::size_t i = 0; i < opts_.dataset_size; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < opts_.dim_theta; ++k) {
        const double d = theta[k] - xi(i, k);
        sq += d * d;
      }
      s.Add(0.5 * sq);
    }
    return s.value() / static_cast<double>(opts_.dataset_size) +
           Bilinear(theta, w);
  }

  double loss_d(const ParameterVector& theta,
                const ParameterVector& w) const override {
    CheckArgs(theta, w);
    CompensatedSum s;
    for (std::size_t i = 0; i < opts_.dataset_size; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < opts_.dim_w; ++k) {
        const double d = w[k] - zeta(i, k);
        sq += d * d;
      }
      s.Add(0.5 * sq);
    }
    return s.value() / static_cast<double>(opts_.dataset_size) -
           Bilinear(theta, w);
  }

  ParameterVector full_grad_g(const ParameterVector& theta,
                              const ParameterVector& w) const override {
    return grad_g(theta, w, FullBatch());
  }
  ParameterVector full_grad_d(const ParameterVector& theta,
                              const ParameterVector& w) const override {
    return grad_d(theta, w, FullBatch());
  }

  // theta - mean_B(xi) + M w. Indices are summed in ascending order so the
  // full batch reproduces full_grad_g bit for bit.
  ParameterVector grad_g(const ParameterVector& theta, const ParameterVector& w,
                         const MiniBatch& batch) const override {
    CheckArgs(theta, w);
    CheckBatch(batch);
    const std::vector<double> mean = BatchMean(xi_, opts_.dim_theta, batch);
    std::vector<double> out(opts_.dim_theta);
    for (std::size_t r = 0; r < opts_.dim_theta; ++r) {
      double mw = 0.0;
      for (std::size_t c = 0; c < opts_.dim_w; ++c) mw += coupling(r, c) * w[c];
      out[r] = (theta[r] - mean[r]) + mw;
    }
    return ParameterVector(std::move(out));
  }

  // w - mean_B(zeta) - M^T theta.
  ParameterVector grad_d(const ParameterVector& theta, const ParameterVector& w,
                         const MiniBatch& batch) const override {
    CheckArgs(theta, w);
    CheckBatch(batch);
    const std::vector<double> mean = BatchMean(zeta_, opts_.dim_w, batch);
    std::vector<double> out(opts_.dim_w);
    for (std::size_t c = 0; c < opts_.dim_w; ++c) {
      double mt = 0.0;
      for (std::size_t r = 0; r < opts_.dim_theta; ++r) {
        mt += coupling(r, c) * theta[r];
      }
      out[c] = (w[c] - mean[c]) - mt;
    }
    return ParameterVector(std::move(out));
  }

  std::optional<Equilibrium> known_lne() const override { return lne_; }

 private:
  double Bilinear(const ParameterVector& theta, const ParameterVector& w) const {
    double s = 0.0;
    for (std::size_t r = 0; r < opts_.dim_theta; ++r) {
      double mw = 0.0;
      for (std::size_t c = 0; c < opts_.dim_w; ++c) mw += coupling(r, c) * w[c];
      s += theta[r] * mw;
    }
    return s;
  }

  static std::vector<double> BatchMean(const std::vector<double>& data,
                                       std::size_t dim,
                                       const MiniBatch& batch) {
    std::vector<std::size_t> idx = batch.indices;
    std::sort(idx.begin(), idx.end());
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i : idx) {
      for (std::size_t k = 0; k < dim; ++k) mean[k] += data[i * dim + k];
    }
    const double m = static_cast<double>(idx.size());
    for (double& v : mean) v /= m;
    return mean;
  }

  void SolveEquilibrium() {
    const std::size_t p = opts_.dim_theta, q = opts_.dim_w, n = p + q;
    std::vector<double> a(n * n, 0.0), b(n, 0.0);
    for (std::size_t r = 0; r < p; ++r) {
      a[r * n + r] = 1.0;
      for (std::size_t c = 0; c < q; ++c) a[r * n + p + c] = coupling(r, c);
    }
    for (std::size_t c = 0; c < q; ++c) {
      a[(p + c) * n + p + c] = 1.0;
      for (std::size_t r = 0; r < p; ++r) a[(p + c) * n + r] = -coupling(r, c);
    }
    const MiniBatch all = FullBatch();
    const std::vector<double> xbar = BatchMean(xi_, p, all);
    const std::vector<double> zbar = BatchMean(zeta_, q, all);
    std::copy(xbar.begin(), xbar.end(), b.begin());
    std::copy(zbar.begin(), zbar.end(), b.begin() + p);
    const std::vector<double> x = internal::SolveDense(std::move(a), std::move(b));
    lne_ = Equilibrium{
        ParameterVector(std::vector<double>(x.begin(), x.begin() + p)),
        ParameterVector(std::vector<double>(x.begin() + p, x.end()))};
  }

  LinearQuadraticOptions opts_;
  std::vector<double> coupling_;
  std::vector<double> xi_;
  std::vector<double> zeta_;
  std::optional<Equilibrium> lne_;
};

// Central difference (f(x + h) - f(x - h)) / (2h).
inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Largest relative discrepancy between the exact gradients and central
// differences of the losses, over every coordinate of both players. The
// relative error of a coordinate is |g - fd| / max(1, |g|, |fd|).
inline double check_gradient(const GameProblem& problem,
                             const ParameterVector& theta,
                             const ParameterVector& w, double h) {
  if (!(h > 0.0)) throw UsageError("finite-difference step must be > 0");
  double worst = 0.0;
  auto compare = [&worst](double g, double fd) {
    const double denom = std::max({1.0, std::abs(g), std::abs(fd)});
    worst = std::max(worst, std::abs(g - fd) / denom);
  };
  const ParameterVector gg = problem.full_grad_g(theta, w);
  for (std::size_t k = 0; k < theta.dim(); ++k) {
    auto f = [&](double v) {
      std::vector<double> t = theta.vec();
      t[k] = v;
      return problem.loss_g(ParameterVector(std::move(t)), w);
    };
    compare(gg[k], central_difference(f, theta[k], h));
  }
  const ParameterVector gd = problem.full_grad_d(theta, w);
  for (std::size_t k = 0; k < w.dim(); ++k) {
    auto f = [&](double v) {
      std::vector<double> x = w.vec();
      x[k] = v;
      return problem.loss_d(theta, ParameterVector(std::move(x)));
    };
    compare(gd[k], central_difference(f, w[k], h));
  }
  return worst;
}

struct ProblemConfig {
  std::string name = "toy";
  double toy_sigma = 0.0;
  LinearQuadraticOptions lq;
};

inline std::unique_ptr<GameProblem> MakeProblem(const ProblemConfig& cfg) {
  if (cfg.name == "toy") return std::make_unique<ToyGame>(cfg.toy_sigma);
  if (cfg.name == "lq") return std::make_unique<LinearQuadraticGame>(cfg.lq);
  throw UsageError("unknown problem '" + cfg.name + "' (expected toy or lq)");
}

}  // namespace lnecg

#endif  // LNECG_GAMES_HPP_
