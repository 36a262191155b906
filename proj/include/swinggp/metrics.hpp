#pragma once

// Forecast-quality metrics against a ground-truth trajectory.
//
// Time windows (non-overlapping, relative to the observation cutoff t_c):
//   observed            [0, t_c)
//   forecast_0_2s       (t_c, t_c + 2]
//   forecast_2_4s       (t_c + 2, t_c + 4]
//   forecast_beyond_4s  (t_c + 4, ∞)
// A target exactly at t_c belongs to no window.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swinggp/ensemble.hpp"
#include "swinggp/errors.hpp"
#include "swinggp/gpr.hpp"
#include "swinggp/sde.hpp"

namespace swinggp {

enum class Window { Observed, Forecast0To2, Forecast2To4, ForecastBeyond4 };

inline constexpr std::array<Window, 4> kAllWindows = {Window::Observed, Window::Forecast0To2,
                                                      Window::Forecast2To4, Window::ForecastBeyond4};

[[nodiscard]] constexpr std::string_view window_name(Window w) {
  switch (w) {
    case Window::Observed: return "observed";
    case Window::Forecast0To2: return "forecast_0_2s";
    case Window::Forecast2To4: return "forecast_2_4s";
    case Window::ForecastBeyond4: return "forecast_beyond_4s";
  }
  return "?";
}

struct MetricsConfig {
  double cutoff = 8.3375;
  double horizon_sustain = 0.1;  // exceedance must persist this long (s)
  double band = 2.0;             // coverage / horizon band in posterior standard deviations
};

struct WindowStats {
  std::size_t count = 0;
  double rmse = 0.0;
  double coverage = 0.0;            // fraction of |mean − truth| ≤ band·std
  double prior_std_rms = 0.0;       // sqrt(mean prior variance)
  double posterior_std_median = 0.0;
  double prior_std_median = 0.0;
  double shrink_fraction = 0.0;     // fraction with posterior std < prior std

  // Accumulators, finalized by compute_metrics.
  double sum_sq_err = 0.0;
  double sum_prior_var = 0.0;
  std::size_t covered = 0;
  std::size_t shrunk = 0;
};

struct MetricsReport {
  std::map<std::pair<Variable, Window>, WindowStats> windows;
  std::map<Variable, double> coverage_2sigma;  // over every target after the cutoff
  std::map<Variable, double> mean_horizon;     // seconds after the cutoff
  std::map<Variable, bool> horizon_censored;   // true: band never exceeded long enough

  [[nodiscard]] const WindowStats* find(Variable v, Window w) const {
    auto it = windows.find({v, w});
    return it == windows.end() ? nullptr : &it->second;
  }

  [[nodiscard]] double rmse(Variable v, Window w) const {
    const WindowStats* s = find(v, w);
    if (s == nullptr) throw InvalidArgument("no targets for requested variable/window");
    return s->rmse;
  }
};

[[nodiscard]] inline Window classify(double t, double cutoff) {
  constexpr double eps = 1e-9;
  if (t < cutoff - eps) return Window::Observed;
  const double lag = t - cutoff;
  if (lag <= 2.0 + eps) return Window::Forecast0To2;
  if (lag <= 4.0 + eps) return Window::Forecast2To4;
  return Window::ForecastBeyond4;
}

[[nodiscard]] inline bool is_on_cutoff(double t, double cutoff) { return std::abs(t - cutoff) <= 1e-9; }

namespace detail {

[[nodiscard]] inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Time from the cutoff until |err| > band·std holds for every sample in a
// span of `sustain` seconds. Returns (horizon, censored).
[[nodiscard]] inline std::pair<double, bool> mean_horizon(
    const std::vector<std::pair<double, bool>>& exceed, double cutoff, double sustain) {
  if (exceed.empty()) return {0.0, true};
  constexpr double eps = 1e-9;
  for (std::size_t i = 0; i < exceed.size(); ++i) {
    if (!exceed[i].second) continue;
    const double start = exceed[i].first;
    bool sustained = true;
    bool reached = false;
    for (std::size_t j = i; j < exceed.size() && exceed[j].first <= start + sustain + eps; ++j) {
      if (!exceed[j].second) {
        sustained = false;
        break;
      }
      if (exceed[j].first >= start + sustain - eps) reached = true;
    }
    if (sustained && reached) return {start - cutoff, false};
  }
  return {exceed.back().first - cutoff, true};
}

}  // namespace detail

/// Scores `forecast` against `truth`. Each target time must lie on the truth grid.
[[nodiscard]] inline MetricsReport compute_metrics(const ForecastResult& forecast,
                                                   const Trajectory& truth,
                                                   const MetricsConfig& cfg = {}) {
  if (forecast.posterior_mean.size() != static_cast<Eigen::Index>(forecast.size()) ||
      forecast.posterior_std.size() != static_cast<Eigen::Index>(forecast.size()) ||
      forecast.target_times.size() != forecast.size()) {
    throw DimensionMismatch("compute_metrics: forecast arrays differ in length");
  }
  MetricsReport report;
  std::map<std::pair<Variable, Window>, std::vector<double>> post_std;
  std::map<std::pair<Variable, Window>, std::vector<double>> prior_std;
  std::map<Variable, std::vector<std::pair<double, bool>>> exceed;
  std::map<Variable, std::pair<std::size_t, std::size_t>> after_cutoff;  // (covered, count)

  const bool has_prior = forecast.prior_std.size() == forecast.posterior_std.size();
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    const IndexEntry e = forecast.target_idx[i];
    const double t = forecast.target_times[i];
    if (e.k >= truth.states.size() || std::abs(truth.times[e.k] - t) > 1e-9 * std::max(1.0, std::abs(t))) {
      throw AlignmentError("forecast target at t=" + std::to_string(t) +
                           " does not align with the truth grid");
    }
    if (is_on_cutoff(t, cfg.cutoff)) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    const double err = forecast.posterior_mean(ii) - component(truth.states[e.k], e.var);
    const double sd = forecast.posterior_std(ii);
    const double psd = has_prior ? forecast.prior_std(ii) : 0.0;
    const bool covered = std::abs(err) <= cfg.band * sd;

    const Window w = classify(t, cfg.cutoff);
    WindowStats& s = report.windows[{e.var, w}];
    ++s.count;
    s.sum_sq_err += err * err;
    s.sum_prior_var += psd * psd;
    s.covered += covered ? 1 : 0;
    s.shrunk += (sd < psd) ? 1 : 0;
    post_std[{e.var, w}].push_back(sd);
    prior_std[{e.var, w}].push_back(psd);

    if (w != Window::Observed) {
      exceed[e.var].push_back({t, !covered});
      auto& [c, n] = after_cutoff[e.var];
      c += covered ? 1 : 0;
      ++n;
    }
  }

  for (auto& [key, s] : report.windows) {
    const double n = static_cast<double>(s.count);
    s.rmse = std::sqrt(s.sum_sq_err / n);
    s.coverage = static_cast<double>(s.covered) / n;
    s.prior_std_rms = std::sqrt(s.sum_prior_var / n);
    s.shrink_fraction = static_cast<double>(s.shrunk) / n;
    s.posterior_std_median = detail::median(post_std[key]);
    s.prior_std_median = detail::median(prior_std[key]);
  }
  for (auto& [v, points] : exceed) {
    std::sort(points.begin(), points.end());
    const auto [h, censored] = detail::mean_horizon(points, cfg.cutoff, cfg.horizon_sustain);
    report.mean_horizon[v] = h;
    report.horizon_censored[v] = censored;
  }
  for (const auto& [v, cn] : after_cutoff) {
    report.coverage_2sigma[v] = static_cast<double>(cn.first) / static_cast<double>(cn.second);
  }
  return report;
}

}  // namespace swinggp
