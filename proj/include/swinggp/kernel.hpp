#pragma once

// Data-driven GPR baseline: a stationary parametric kernel whose amplitude,
// length scale and noise floor are fit by minimizing the negative log marginal
// likelihood of the observations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "swinggp/errors.hpp"
#include "swinggp/gpr.hpp"

namespace swinggp {

enum class KernelFamily { Exponential, SquaredExponential };
enum class MeanModel { Zero, ConstantFitted };

[[nodiscard]] constexpr std::string_view family_name(KernelFamily f) {
  return f == KernelFamily::Exponential ? "exponential" : "squared_exponential";
}

[[nodiscard]] constexpr std::string_view mean_model_name(MeanModel m) {
  return m == MeanModel::Zero ? "zero" : "constant_fitted";
}

struct KernelSpec {
  KernelFamily family = KernelFamily::Exponential;
  double amplitude = 1.0;     // σ_k², kernel value at zero lag
  double length_scale = 1.0;  // seconds
  double noise_floor = 0.0;   // added to the diagonal of the observation block

  [[nodiscard]] double operator()(double lag) const {
    const double r = std::abs(lag) / length_scale;
    return family == KernelFamily::Exponential ? amplitude * std::exp(-r)
                                               : amplitude * std::exp(-0.5 * r * r);
  }

  void validate() const {
    if (!(amplitude > 0.0)) throw InvalidArgument("kernel amplitude must be > 0");
    if (!(length_scale > 0.0)) throw InvalidArgument("kernel length_scale must be > 0");
    if (!(noise_floor >= 0.0)) throw InvalidArgument("kernel noise_floor must be >= 0");
  }
};

namespace detail {

inline void check_single_variable(const IndexSet& idx, std::string_view what) {
  if (idx.empty()) return;
  const Variable v = idx[0].var;
  for (const auto& e : idx) {
    if (e.var != v) {
      throw InvalidArgument(std::string(what) +
                            ": the data-driven baseline works on a single variable");
    }
  }
}

[[nodiscard]] inline std::vector<double> times_of(const IndexSet& idx, double dt) {
  std::vector<double> t;
  t.reserve(idx.size());
  for (const auto& e : idx) t.push_back(static_cast<double>(e.k) * dt);
  return t;
}

[[nodiscard]] inline Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const std::vector<double>& a,
                                                   const std::vector<double>& b) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t j = 0; j < b.size(); ++j) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = k(a[i] - b[j]);
    }
  }
  return out;
}

[[nodiscard]] inline double fitted_mean(const Eigen::VectorXd& y, MeanModel m) {
  return (m == MeanModel::ConstantFitted && y.size() > 0) ? y.mean() : 0.0;
}

[[nodiscard]] inline double nlml_centered(const std::vector<double>& t, const Eigen::VectorXd& y,
                                          const KernelSpec& kernel) {
  Eigen::MatrixXd k = kernel_matrix(kernel, t, t);
  k.diagonal().array() += kernel.noise_floor;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw SingularPrior("kernel matrix is not positive definite");
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) throw SingularPrior("kernel matrix is not positive definite");
    log_det += 2.0 * std::log(l(i, i));
  }
  const Eigen::VectorXd w = llt.matrixL().solve(y);
  const double n = static_cast<double>(y.size());
  return 0.5 * w.squaredNorm() + 0.5 * log_det + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

/// Negative log marginal likelihood of `obs` (times k * dt) under `kernel`.
[[nodiscard]] inline double nlml(const Observations& obs, double dt, const KernelSpec& kernel,
                                 MeanModel mean_model) {
  kernel.validate();
  if (obs.idx.empty()) throw InvalidArgument("nlml: need at least one observation");
  if (obs.values.size() != static_cast<Eigen::Index>(obs.idx.size())) {
    throw DimensionMismatch("nlml: values and index set differ in length");
  }
  detail::check_single_variable(obs.idx, "nlml");
  const Eigen::VectorXd y = obs.values.array() - detail::fitted_mean(obs.values, mean_model);
  return detail::nlml_centered(detail::times_of(obs.idx, dt), y, kernel);
}

/// Search box and multi-start grid for the hyperparameter fit. All bounds are
/// relative to v, the sample variance of the centered data, and to the time
/// span / minimum spacing of the observations.
struct FitOptions {
  double amplitude_lo = 1e-4;  // × v
  double amplitude_hi = 1e2;   // × v
  double length_lo = 0.5;      // × minimum spacing
  double length_hi = 10.0;     // × span
  double noise_lo = 1e-8;      // × v
  double noise_hi = 1.0;       // × v
  std::array<double, 5> amplitude_starts = {0.1, 0.3, 1.0, 3.0, 10.0};  // × v
  std::size_t length_starts = 5;  // log-spaced between 2 × spacing and span
  std::array<double, 3> noise_starts = {1e-6, 1e-4, 1e-2};  // × v
  std::size_t refined_starts = 3;  // best grid points refined by coordinate search
  double initial_step = std::log(2.0);
  double final_step = 1e-3;
  std::size_t max_evaluations = 120;  // per refined start
};

struct KernelFit {
  KernelSpec kernel;
  MeanModel mean_model = MeanModel::ConstantFitted;
  double mean = 0.0;
  double nlml = std::numeric_limits<double>::infinity();
  std::vector<double> accepted_nlml;  // objective after each accepted step of the winning start
  std::array<double, 2> amplitude_bounds{};
  std::array<double, 2> length_bounds{};
  std::array<double, 2> noise_bounds{};
};

/// Fits amplitude, length scale and noise floor by deterministic
/// coordinate refinement in log-parameter space from a fixed multi-start grid.
[[nodiscard]] inline KernelFit fit_hyperparameters(const Observations& obs, double dt,
                                                   KernelFamily family,
                                                   MeanModel mean_model = MeanModel::ConstantFitted,
                                                   const FitOptions& opt = {}) {
  if (obs.idx.size() < 8) throw InvalidArgument("fit_hyperparameters: need at least 8 observations");
  if (obs.values.size() != static_cast<Eigen::Index>(obs.idx.size())) {
    throw DimensionMismatch("fit_hyperparameters: values and index set differ in length");
  }
  detail::check_single_variable(obs.idx, "fit_hyperparameters");

  const std::vector<double> t = detail::times_of(obs.idx, dt);
  const double mean = detail::fitted_mean(obs.values, mean_model);
  const Eigen::VectorXd y = obs.values.array() - mean;

  std::vector<double> sorted = t;
  std::sort(sorted.begin(), sorted.end());
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) spacing = std::min(spacing, sorted[i] - sorted[i - 1]);
  const double span = sorted.back() - sorted.front();
  if (!(spacing > 0.0)) throw InvalidArgument("fit_hyperparameters: observation times must be distinct");

  const double var = y.squaredNorm() / static_cast<double>(y.size());
  const double v = std::max(var, 1e-12 * std::max(1.0, mean * mean));

  KernelFit fit;
  fit.mean_model = mean_model;
  fit.mean = mean;
  fit.amplitude_bounds = {opt.amplitude_lo * v, opt.amplitude_hi * v};
  fit.length_bounds = {opt.length_lo * spacing, opt.length_hi * span};
  fit.noise_bounds = {opt.noise_lo * v, opt.noise_hi * v};

  using Point = std::array<double, 3>;  // log amplitude, log length, log noise
  const Point lo{std::log(fit.amplitude_bounds[0]), std::log(fit.length_bounds[0]),
                 std::log(fit.noise_bounds[0])};
  const Point hi{std::log(fit.amplitude_bounds[1]), std::log(fit.length_bounds[1]),
                 std::log(fit.noise_bounds[1])};

  auto to_kernel = [&](const Point& p) {
    return KernelSpec{family, std::exp(p[0]), std::exp(p[1]), std::exp(p[2])};
  };
  auto objective = [&](const Point& p) {
    try {
      const double f = detail::nlml_centered(t, y, to_kernel(p));
      return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    } catch (const SingularPrior&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  // Strict ordering: objective, then length scale, then amplitude.
  auto better = [](double fa, const Point& a, double fb, const Point& b) {
    return std::tie(fa, a[1], a[0]) < std::tie(fb, b[1], b[0]);
  };

  struct Candidate {
    Point p;
    double f;
  };
  std::vector<Candidate> grid;
  const double l0 = std::log(2.0 * spacing);
  const double l1 = std::log(std::max(span, 2.0 * spacing));
  for (double a : opt.amplitude_starts) {
    for (std::size_t i = 0; i < opt.length_starts; ++i) {
      const double frac = opt.length_starts > 1 ? static_cast<double>(i) / static_cast<double>(opt.length_starts - 1) : 0.0;
      for (double s : opt.noise_starts) {
        Point p{std::log(a * v), l0 + frac * (l1 - l0), std::log(s * v)};
        for (std::size_t d = 0; d < 3; ++d) p[d] = std::clamp(p[d], lo[d], hi[d]);
        grid.push_back({p, objective(p)});
      }
    }
  }
  std::sort(grid.begin(), grid.end(),
            [&](const Candidate& a, const Candidate& b) { return better(a.f, a.p, b.f, b.p); });
  if (!std::isfinite(grid.front().f)) throw FitFailed("every multi-start point failed to factorize");

  Point best_p = grid.front().p;
  double best_f = grid.front().f;
  std::vector<double> best_trace{best_f};

  const std::size_t starts = std::min(opt.refined_starts, grid.size());
  for (std::size_t s = 0; s < starts; ++s) {
    if (!std::isfinite(grid[s].f)) break;
    Point p = grid[s].p;
    double f = grid[s].f;
    std::vector<double> trace{f};
    double step = opt.initial_step;
    std::size_t evals = 0;
    while (step >= opt.final_step && evals < opt.max_evaluations) {
      bool improved = false;
      for (std::size_t d = 0; d < 3 && evals < opt.max_evaluations; ++d) {
        for (double dir : {1.0, -1.0}) {
          Point q = p;
          q[d] = std::clamp(q[d] + dir * step, lo[d], hi[d]);
          if (q[d] == p[d]) continue;
          const double fq = objective(q);
          ++evals;
          if (fq < f) {
            p = q;
            f = fq;
            trace.push_back(f);
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (better(f, p, best_f, best_p)) {
      best_p = p;
      best_f = f;
      best_trace = std::move(trace);
    }
  }

  fit.kernel = to_kernel(best_p);
  fit.nlml = best_f;
  fit.accepted_nlml = std::move(best_trace);
  return fit;
}

/// Joint prior generated by `kernel` for the observation and target entries.
[[nodiscard]] inline JointPrior kernel_prior(const IndexSet& obs_idx, const IndexSet& target_idx,
                                             double dt, const KernelSpec& kernel, double mean,
                                             TargetCov mode = TargetCov::Full) {
  kernel.validate();
  JointPrior prior;
  prior.obs_idx = obs_idx;
  prior.target_idx = target_idx;
  prior.obs_times = detail::times_of(obs_idx, dt);
  prior.target_times = detail::times_of(target_idx, dt);
  prior.mean_o = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(obs_idx.size()), mean);
  prior.mean_f = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(target_idx.size()), mean);
  prior.c_oo = detail::kernel_matrix(kernel, prior.obs_times, prior.obs_times);
  prior.c_oo.diagonal().array() += kernel.noise_floor;
  prior.c_of = detail::kernel_matrix(kernel, prior.obs_times, prior.target_times);
  if (mode == TargetCov::Full) {
    prior.c_ff = detail::kernel_matrix(kernel, prior.target_times, prior.target_times);
    prior.c_ff_diag = prior.c_ff->diagonal();
  } else {
    prior.c_ff_diag = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(target_idx.size()), kernel(0.0));
  }
  return prior;
}

/// Kriging forecast of a single variable from its own history.
[[nodiscard]] inline ForecastResult baseline_forecast(const Observations& obs, double dt,
                                                      const KernelSpec& kernel,
                                                      const IndexSet& targets,
                                                      MeanModel mean_model = MeanModel::ConstantFitted,
                                                      TargetCov mode = TargetCov::Full) {
  detail::check_single_variable(obs.idx, "baseline_forecast");
  detail::check_single_variable(targets, "baseline_forecast");
  if (!obs.idx.empty() && !targets.empty() && obs.idx[0].var != targets[0].var) {
    throw InvalidArgument("baseline_forecast: cannot predict a variable that is not observed");
  }
  const JointPrior prior =
      kernel_prior(obs.idx, targets, dt, kernel, detail::fitted_mean(obs.values, mean_model), mode);
  return condition(prior, obs);
}

}  // namespace swinggp
