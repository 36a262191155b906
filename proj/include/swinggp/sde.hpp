#pragma once

// Stochastic swing equation of a single wind-driven generator on an infinite
// bus, integrated with a second-order strong-stability-preserving stochastic
// Runge-Kutta scheme.
//
//   dθ   = ω_B (ω − ω_S) dt
//   dω   = ω_S/(2H) [⟨P_m⟩ + z − P_max sin θ − D (ω − ω_S)] dt
//   dz   = −z/λ dt + σ √(2/λ) dW          (z = P'_m, Ornstein-Uhlenbeck)

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "swinggp/errors.hpp"
#include "swinggp/rng.hpp"

namespace swinggp {

/// Generator / infinite-bus constants. Defaults are the reference study values.
struct GridParams {
  double p_max = 2.1;                      // P_max = EV/X, p.u.
  double h_inertia = 5.0;                  // H, s
  double damping = 5.0;                    // D, p.u.
  double p_m_mean = 0.9;                   // ⟨P_m⟩, p.u.
  double omega_b = 120.0 * std::numbers::pi;  // ω_B, rad/s
  double omega_s = 1.0;                    // ω_S, p.u.

  void validate() const {
    if (!(p_max > 0.0)) throw InvalidArgument("grid.p_max must be > 0");
    if (!(h_inertia > 0.0)) throw InvalidArgument("grid.h_inertia must be > 0");
    if (!(damping >= 0.0)) throw InvalidArgument("grid.damping must be >= 0");
    if (!(omega_b > 0.0)) throw InvalidArgument("grid.omega_b must be > 0");
    if (!(omega_s > 0.0)) throw InvalidArgument("grid.omega_s must be > 0");
    if (!(p_m_mean >= 0.0)) throw InvalidArgument("grid.p_m_mean must be >= 0");
    if (!(p_m_mean < p_max)) throw NoEquilibrium("grid.p_m_mean must be < grid.p_max");
  }

  friend bool operator==(const GridParams&, const GridParams&) = default;
};

/// Wind-power fluctuation process: stationary std `sigma`, correlation time `lambda`.
struct OuParams {
  double sigma = 0.1;
  double lambda = 0.026;

  [[nodiscard]] double reversion_rate() const { return 1.0 / lambda; }
  [[nodiscard]] double diffusion() const { return sigma * std::sqrt(2.0 / lambda); }

  void validate() const {
    if (!(sigma >= 0.0)) throw InvalidArgument("ou.sigma must be >= 0");
    if (!(lambda > 0.0)) throw InvalidArgument("ou.lambda must be > 0");
  }

  friend bool operator==(const OuParams&, const OuParams&) = default;
};

enum class InitPmMode : std::uint8_t { SampleStationary = 0, Fixed = 1 };

struct SimConfig {
  double dt = 0.0025;
  double t_end = 25.0;
  std::uint64_t seed = 20190601;
  double init_theta = 0.45;
  double init_omega = 1.0;
  InitPmMode init_pm_mode = InitPmMode::SampleStationary;
  double init_pm_value = 0.0;  // used when init_pm_mode == Fixed

  /// Number of integration steps K; the time grid has K + 1 points.
  [[nodiscard]] std::size_t steps() const {
    return static_cast<std::size_t>(std::llround(t_end / dt));
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("sim.dt must be > 0");
    if (!(t_end >= dt) || !std::isfinite(t_end)) throw InvalidArgument("sim.t_end must be >= sim.dt");
    if (steps() < 1) throw InvalidArgument("sim.t_end / sim.dt must round to at least one step");
    if (!std::isfinite(init_theta) || !std::isfinite(init_omega) || !std::isfinite(init_pm_value)) {
      throw InvalidArgument("initial conditions must be finite");
    }
  }

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct StateVec {
  double theta = 0.0;
  double omega = 0.0;
  double pm_prime = 0.0;

  [[nodiscard]] bool is_finite() const {
    return std::isfinite(theta) && std::isfinite(omega) && std::isfinite(pm_prime);
  }

  friend bool operator==(const StateVec&, const StateVec&) = default;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  StreamId stream;  // seed actually used: (master seed, realization index)
};

using Vec2 = std::array<double, 2>;

/// Deterministic drift of (θ, ω) with the wind fluctuation removed.
[[nodiscard]] inline Vec2 drift_f(const StateVec& s, const GridParams& p) {
  const double slip = s.omega - p.omega_s;
  return {p.omega_b * slip,
          p.omega_s / (2.0 * p.h_inertia) *
              (p.p_m_mean - p.p_max * std::sin(s.theta) - p.damping * slip)};
}

/// Coefficient multiplying z = P'_m in the (θ, ω) equations.
[[nodiscard]] inline Vec2 noise_coupling_g(const GridParams& p) {
  return {0.0, p.omega_s / (2.0 * p.h_inertia)};
}

/// Steady-state rotor angle with ω = ω_S and no wind fluctuation.
[[nodiscard]] inline double equilibrium_angle(const GridParams& p) {
  if (!(p.p_m_mean < p.p_max)) {
    throw NoEquilibrium("no equilibrium angle: p_m_mean >= p_max");
  }
  return std::asin(p.p_m_mean / p.p_max);
}

namespace detail {

// One step of the stochastic RK scheme. xi drives the Wiener increment over
// the step, eta the independent part of its time integral.
[[nodiscard]] inline StateVec rk2_advance(const StateVec& s, const GridParams& p,
                                          const OuParams& ou, double h, double xi,
                                          double eta) {
  const double a = ou.reversion_rate();
  const double b = ou.diffusion();
  const double sqrt_h = std::sqrt(h);
  const double h32 = h * sqrt_h;
  const double inv_sqrt12 = 1.0 / std::sqrt(12.0);
  const Vec2 g = noise_coupling_g(p);

  const Vec2 f_k = drift_f(s, p);
  const double z_k = s.pm_prime;
  const Vec2 rate_k{f_k[0] + g[0] * z_k, f_k[1] + g[1] * z_k};

  StateVec pred;
  pred.theta = s.theta + rate_k[0] * h;
  pred.omega = s.omega + rate_k[1] * h;
  pred.pm_prime = z_k + b * xi * sqrt_h - a * z_k * h;

  const Vec2 f_bar = drift_f(pred, p);
  const Vec2 rate_bar{f_bar[0] + g[0] * pred.pm_prime, f_bar[1] + g[1] * pred.pm_prime};

  const double integral_noise = b * h32 * inv_sqrt12 * eta;
  StateVec next;
  next.theta = s.theta + 0.5 * h * (rate_k[0] + rate_bar[0]) + g[0] * integral_noise;
  next.omega = s.omega + 0.5 * h * (rate_k[1] + rate_bar[1]) + g[1] * integral_noise;
  next.pm_prime = z_k + b * xi * sqrt_h - 0.5 * h * a * (z_k + pred.pm_prime) - a * integral_noise;
  return next;
}

}  // namespace detail

/// Advances `s` by one step of size `dt` using the standard-normal draws `xi`, `eta`.
[[nodiscard]] inline StateVec rk2_step(const StateVec& s, const GridParams& p, const OuParams& ou,
                                       double dt, double xi, double eta) {
  if (!(dt > 0.0)) throw InvalidArgument("rk2_step: dt must be > 0");
  StateVec next = detail::rk2_advance(s, p, ou, dt, xi, eta);
  if (!next.is_finite()) throw IntegrationDiverged(0, 0);
  return next;
}

[[nodiscard]] inline StateVec initial_state(const OuParams& ou, const SimConfig& cfg,
                                            NormalStream& rng) {
  StateVec s{cfg.init_theta, cfg.init_omega, cfg.init_pm_value};
  if (cfg.init_pm_mode == InitPmMode::SampleStationary) s.pm_prime = ou.sigma * rng();
  return s;
}

/// Integrates one realization, calling `sink(k, state)` for k = 0..K.
///
/// Draw order per realization: the initial P'_m (when sampled), then (xi, eta)
/// for each step.
template <class Sink>
void integrate(const GridParams& p, const OuParams& ou, const SimConfig& cfg, NormalStream& rng,
               Sink&& sink) {
  const std::size_t steps = cfg.steps();
  StateVec s = initial_state(ou, cfg, rng);
  if (!s.is_finite()) throw IntegrationDiverged(rng.id().index, 0);
  sink(std::size_t{0}, s);
  for (std::size_t k = 0; k < steps; ++k) {
    const double xi = rng();
    const double eta = rng();
    s = detail::rk2_advance(s, p, ou, cfg.dt, xi, eta);
    if (!s.is_finite()) throw IntegrationDiverged(rng.id().index, k + 1);
    sink(k + 1, s);
  }
}

[[nodiscard]] inline Trajectory simulate_trajectory(const GridParams& p, const OuParams& ou,
                                                    const SimConfig& cfg, NormalStream& rng) {
  p.validate();
  ou.validate();
  cfg.validate();
  const std::size_t n_points = cfg.steps() + 1;
  Trajectory traj;
  traj.stream = rng.id();
  traj.times.resize(n_points);
  traj.states.resize(n_points);
  for (std::size_t k = 0; k < n_points; ++k) traj.times[k] = static_cast<double>(k) * cfg.dt;
  integrate(p, ou, cfg, rng, [&](std::size_t k, const StateVec& s) { traj.states[k] = s; });
  return traj;
}

/// Realization `index` of the ensemble keyed by `cfg.seed`.
[[nodiscard]] inline Trajectory simulate_realization(const GridParams& p, const OuParams& ou,
                                                     const SimConfig& cfg, std::uint64_t index) {
  NormalStream rng(StreamId{cfg.seed, index});
  return simulate_trajectory(p, ou, cfg, rng);
}

}  // namespace swinggp
