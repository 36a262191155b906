#pragma once

// Gaussian-process conditioning on a joint prior over observed and target
// entries:
//
//   x̂_f = x̄_f + C_fo C_oo⁻¹ (x_o − x̄_o)
//   Ĉ_ff = C_ff − C_fo C_oo⁻¹ C_of
//
// C_oo is factorized by Cholesky with an escalating diagonal nugget.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "swinggp/ensemble.hpp"
#include "swinggp/errors.hpp"

namespace swinggp {

/// Nugget ladder, as multiples of τ = max(diag C_oo). The first level whose
/// Cholesky factorization succeeds is used.
inline constexpr std::array<double, 4> kNuggetLadder = {0.0, 1e-10, 1e-8, 1e-6};

/// Relative tolerance for slightly negative posterior variances before they
/// are treated as a failed factorization.
inline constexpr double kNegativeVarianceTolerance = 1e-8;

enum class TargetCov { Full, DiagonalOnly };

struct JointPrior {
  IndexSet obs_idx;
  IndexSet target_idx;
  std::vector<double> obs_times;
  std::vector<double> target_times;
  Eigen::VectorXd mean_o;
  Eigen::VectorXd mean_f;
  Eigen::MatrixXd c_oo;
  Eigen::MatrixXd c_of;                 // C_fo is its transpose
  std::optional<Eigen::MatrixXd> c_ff;  // absent when only the diagonal was requested
  Eigen::VectorXd c_ff_diag;
  Eigen::VectorXd obs_noise;  // variance added to diag C_oo; empty means exact observations

  void validate() const {
    const auto no = static_cast<Eigen::Index>(obs_idx.size());
    const auto nf = static_cast<Eigen::Index>(target_idx.size());
    if (mean_o.size() != no || c_oo.rows() != no || c_oo.cols() != no || c_of.rows() != no ||
        mean_f.size() != nf || c_of.cols() != nf || c_ff_diag.size() != nf ||
        (c_ff && (c_ff->rows() != nf || c_ff->cols() != nf)) ||
        (obs_noise.size() != 0 && obs_noise.size() != no)) {
      throw DimensionMismatch("JointPrior: inconsistent block dimensions");
    }
    if (obs_noise.size() != 0 && !(obs_noise.array() >= 0.0).all()) {
      throw InvalidArgument("observation noise variances must be non-negative");
    }
  }
};

struct Observations {
  IndexSet idx;
  Eigen::VectorXd values;
};

struct ForecastResult {
  IndexSet target_idx;
  std::vector<double> target_times;
  Eigen::VectorXd posterior_mean;
  std::optional<Eigen::MatrixXd> posterior_cov;
  Eigen::VectorXd posterior_std;
  Eigen::VectorXd prior_mean;
  Eigen::VectorXd prior_std;
  double nugget_used = 0.0;
  double obs_noise_max = 0.0;

  [[nodiscard]] std::size_t size() const { return target_idx.size(); }
};

/// Prior moments for (observation, target) entries from the ensemble.
[[nodiscard]] inline JointPrior build_prior(const MomentView& view, const IndexSet& obs_idx,
                                            const IndexSet& target_idx,
                                            TargetCov mode = TargetCov::Full) {
  const Ensemble& ens = view.ensemble();
  JointPrior prior;
  prior.obs_idx = obs_idx;
  prior.target_idx = target_idx;
  for (const auto& e : obs_idx) prior.obs_times.push_back(ens.time(e.k));
  for (const auto& e : target_idx) prior.target_times.push_back(ens.time(e.k));

  prior.mean_o = view.mean_vector(obs_idx);
  prior.mean_f = view.mean_vector(target_idx);
  prior.c_oo = view.cov_block(obs_idx, obs_idx);
  prior.c_of = view.cov_block(obs_idx, target_idx);
  if (mode == TargetCov::Full) {
    prior.c_ff = view.cov_block(target_idx, target_idx);
    prior.c_ff_diag = prior.c_ff->diagonal();
  } else {
    prior.c_ff_diag = view.variance(target_idx);
  }
  return prior;
}

/// Sets an observation-noise variance of `rel` times the largest prior
/// variance among the observed entries of the same variable.
///
/// An ensemble of N members gives C_oo of rank at most N−1; with more
/// observations than that, exact interpolation overfits the sampling noise
/// of the moments. A small relative noise term regularizes the regression.
inline void set_relative_observation_noise(JointPrior& prior, double rel) {
  if (!(rel >= 0.0) || !std::isfinite(rel)) throw InvalidArgument("relative observation noise must be >= 0");
  const auto no = static_cast<Eigen::Index>(prior.obs_idx.size());
  prior.obs_noise = Eigen::VectorXd::Zero(no);
  if (rel == 0.0) return;
  std::array<double, kNumVariables> vmax{};
  for (Eigen::Index i = 0; i < no; ++i) {
    const auto v = static_cast<std::size_t>(prior.obs_idx[static_cast<std::size_t>(i)].var);
    vmax[v] = std::max(vmax[v], prior.c_oo(i, i));
  }
  for (Eigen::Index i = 0; i < no; ++i) {
    prior.obs_noise(i) = rel * vmax[static_cast<std::size_t>(prior.obs_idx[static_cast<std::size_t>(i)].var)];
  }
}

namespace detail {

struct NuggetCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget = 0.0;
  bool degenerate = false;  // C_oo is identically zero: observations carry no information
};

// A factorization counts as successful when every pivot is comfortably above
// round-off relative to the largest diagonal entry.
[[nodiscard]] inline bool pivots_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, double tau,
                                    Eigen::Index n) {
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd& lu = llt.matrixLLT();
  const double floor = static_cast<double>(std::max<Eigen::Index>(n, 1)) *
                       std::numeric_limits<double>::epsilon() * tau;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = lu(i, i);
    if (!std::isfinite(d) || !(d * d > floor)) return false;
  }
  return true;
}

[[nodiscard]] inline NuggetCholesky factor_with_nugget(const Eigen::MatrixXd& c_oo) {
  NuggetCholesky out;
  const Eigen::Index n = c_oo.rows();
  if (n == 0) return out;
  if (!c_oo.allFinite()) throw SingularPrior("C_oo contains non-finite entries");
  const double tau = c_oo.diagonal().maxCoeff();
  if (c_oo.cwiseAbs().maxCoeff() == 0.0) {
    out.degenerate = true;
    return out;
  }
  if (!(tau > 0.0)) throw SingularPrior("C_oo has no positive diagonal entry");
  for (double level : kNuggetLadder) {
    Eigen::MatrixXd a = c_oo;
    a.diagonal().array() += level * tau;
    out.llt.compute(a);
    if (pivots_ok(out.llt, tau, n)) {
      out.nugget = level * tau;
      return out;
    }
  }
  throw SingularPrior("Cholesky factorization of C_oo failed at the largest nugget (" +
                      std::to_string(kNuggetLadder.back()) + " * max diag)");
}

}  // namespace detail

/// Factorized posterior for a fixed prior; applies to any observation vector.
///
/// The posterior covariance depends only on the prior, so it is computed once
/// and shared by every call to `apply`.
class Conditioner {
public:
  explicit Conditioner(const JointPrior& prior) : prior_(&prior) {
    prior.validate();
    if (prior.obs_noise.size() != 0 && prior.obs_noise.any()) {
      Eigen::MatrixXd a = prior.c_oo;
      a.diagonal() += prior.obs_noise;
      chol_ = detail::factor_with_nugget(a);
    } else {
      chol_ = detail::factor_with_nugget(prior.c_oo);
    }
    const auto nf = static_cast<Eigen::Index>(prior.target_idx.size());

    Eigen::VectorXd reduction = Eigen::VectorXd::Zero(nf);
    Eigen::MatrixXd v;  // L⁻¹ C_of
    if (informative()) {
      v = chol_.llt.matrixL().solve(prior.c_of);
      reduction = v.colwise().squaredNorm().transpose();
    }

    Eigen::VectorXd diag = prior.c_ff_diag - reduction;
    if (prior.c_ff) {
      Eigen::MatrixXd cov = *prior.c_ff;
      if (informative()) cov.noalias() -= v.transpose() * v;
      cov = 0.5 * (cov + cov.transpose()).eval();
      diag = cov.diagonal();
      cov_ = std::move(cov);
    }

    const double tau_ff = nf > 0 ? std::max(0.0, prior.c_ff_diag.maxCoeff()) : 0.0;
    std_.resize(nf);
    for (Eigen::Index i = 0; i < nf; ++i) {
      double d = diag(i);
      if (d < 0.0) {
        if (d < -kNegativeVarianceTolerance * tau_ff) {
          throw SingularPrior("posterior variance " + std::to_string(d) + " at target " +
                              std::to_string(i) + " is below tolerance");
        }
        d = 0.0;
        if (cov_) (*cov_)(i, i) = 0.0;
      }
      std_(i) = std::sqrt(d);
    }
  }

  [[nodiscard]] double nugget_used() const { return chol_.nugget; }
  [[nodiscard]] const Eigen::VectorXd& posterior_std() const { return std_; }
  [[nodiscard]] const std::optional<Eigen::MatrixXd>& posterior_cov() const { return cov_; }

  [[nodiscard]] Eigen::VectorXd posterior_mean(const Eigen::VectorXd& x_obs) const {
    const JointPrior& p = *prior_;
    if (x_obs.size() != p.mean_o.size()) {
      throw DimensionMismatch("observation vector has " + std::to_string(x_obs.size()) +
                              " entries, prior expects " + std::to_string(p.mean_o.size()));
    }
    if (!x_obs.allFinite()) throw InvalidArgument("observations must be finite");
    if (!informative()) return p.mean_f;
    const Eigen::VectorXd alpha = chol_.llt.solve(x_obs - p.mean_o);
    Eigen::VectorXd mean = p.mean_f;
    mean.noalias() += p.c_of.transpose() * alpha;
    return mean;
  }

  [[nodiscard]] ForecastResult apply(const Observations& obs) const {
    const JointPrior& p = *prior_;
    if (!(obs.idx == p.obs_idx)) throw DimensionMismatch("observation index set differs from the prior's");
    if (obs.values.size() != static_cast<Eigen::Index>(obs.idx.size())) {
      throw DimensionMismatch("observation values and index set differ in length");
    }
    ForecastResult r;
    r.target_idx = p.target_idx;
    r.target_times = p.target_times;
    r.posterior_mean = posterior_mean(obs.values);
    r.posterior_cov = cov_;
    r.posterior_std = std_;
    r.prior_mean = p.mean_f;
    r.prior_std = p.c_ff_diag.cwiseMax(0.0).cwiseSqrt();
    r.nugget_used = chol_.nugget;
    r.obs_noise_max = p.obs_noise.size() != 0 ? p.obs_noise.maxCoeff() : 0.0;
    return r;
  }

private:
  [[nodiscard]] bool informative() const {
    return prior_->obs_idx.size() > 0 && !chol_.degenerate;
  }

  const JointPrior* prior_;
  detail::NuggetCholesky chol_;
  std::optional<Eigen::MatrixXd> cov_;
  Eigen::VectorXd std_;
};

/// Posterior of the targets given `obs` (which must use the prior's observation set).
[[nodiscard]] inline ForecastResult condition(const JointPrior& prior, const Observations& obs) {
  return Conditioner(prior).apply(obs);
}

/// Rows of `r` belonging to variable `v`, in their original order.
[[nodiscard]] inline ForecastResult select_variable(const ForecastResult& r, Variable v) {
  std::vector<Eigen::Index> rows;
  std::vector<IndexEntry> entries;
  for (std::size_t i = 0; i < r.target_idx.size(); ++i) {
    if (r.target_idx[i].var == v) {
      rows.push_back(static_cast<Eigen::Index>(i));
      entries.push_back(r.target_idx[i]);
    }
  }
  ForecastResult out;
  out.target_idx = IndexSet(std::move(entries));
  out.nugget_used = r.nugget_used;
  out.obs_noise_max = r.obs_noise_max;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.posterior_mean.resize(n);
  out.posterior_std.resize(n);
  out.prior_mean.resize(n);
  out.prior_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = rows[static_cast<std::size_t>(i)];
    out.target_times.push_back(r.target_times[static_cast<std::size_t>(src)]);
    out.posterior_mean(i) = r.posterior_mean(src);
    out.posterior_std(i) = r.posterior_std(src);
    out.prior_mean(i) = r.prior_mean(src);
    out.prior_std(i) = r.prior_std(src);
  }
  if (r.posterior_cov) {
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        cov(i, j) = (*r.posterior_cov)(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
      }
    }
    out.posterior_cov = std::move(cov);
  }
  return out;
}

}  // namespace swinggp
