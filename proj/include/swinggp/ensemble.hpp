#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "swinggp/errors.hpp"
#include "swinggp/rng.hpp"
#include "swinggp/sde.hpp"

namespace swinggp {

enum class Variable : std::uint8_t { Theta = 0, Omega = 1, PmPrime = 2 };

inline constexpr std::size_t kNumVariables = 3;
inline constexpr Variable kAllVariables[] = {Variable::Theta, Variable::Omega, Variable::PmPrime};

[[nodiscard]] constexpr std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::Theta: return "theta";
    case Variable::Omega: return "omega";
    case Variable::PmPrime: return "pm_prime";
  }
  return "?";
}

[[nodiscard]] inline double component(const StateVec& s, Variable v) {
  switch (v) {
    case Variable::Theta: return s.theta;
    case Variable::Omega: return s.omega;
    case Variable::PmPrime: return s.pm_prime;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct IndexEntry {
  Variable var = Variable::Theta;
  std::size_t k = 0;

  friend auto operator<=>(const IndexEntry&, const IndexEntry&) = default;
};

/// Ordered, duplicate-free list of (variable, time index) pairs.
class IndexSet {
public:
  IndexSet() = default;

  explicit IndexSet(std::vector<IndexEntry> entries) : entries_(std::move(entries)) {
    std::set<IndexEntry> seen;
    for (const auto& e : entries_) {
      if (!seen.insert(e).second) {
        throw InvalidArgument("IndexSet: duplicate entry (" + std::string(variable_name(e.var)) +
                              ", " + std::to_string(e.k) + ")");
      }
    }
  }

  /// Entries (var, k) for k = first, first + stride, ... < last.
  [[nodiscard]] static IndexSet range(Variable var, std::size_t first, std::size_t last,
                                      std::size_t stride = 1) {
    if (stride == 0) throw InvalidArgument("IndexSet::range: stride must be >= 1");
    std::vector<IndexEntry> out;
    for (std::size_t k = first; k < last; k += stride) out.push_back({var, k});
    return IndexSet(std::move(out));
  }

  [[nodiscard]] IndexSet concat(const IndexSet& other) const {
    std::vector<IndexEntry> out = entries_;
    out.insert(out.end(), other.entries_.begin(), other.entries_.end());
    return IndexSet(std::move(out));
  }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const IndexEntry& operator[](std::size_t i) const { return entries_[i]; }
  [[nodiscard]] auto begin() const noexcept { return entries_.begin(); }
  [[nodiscard]] auto end() const noexcept { return entries_.end(); }
  [[nodiscard]] const std::vector<IndexEntry>& entries() const noexcept { return entries_; }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

private:
  std::vector<IndexEntry> entries_;
};

/// N realizations of the swing model on a shared uniform time grid.
///
/// Storage is an N x 3(K+1) column-major matrix: column `v * (K+1) + k` holds
/// variable v at time index k across all realizations.
class Ensemble {
public:
  Ensemble(GridParams grid, OuParams ou, SimConfig sim, Eigen::MatrixXd data)
      : grid_(grid), ou_(ou), sim_(sim), data_(std::move(data)) {
    const std::size_t points = sim_.steps() + 1;
    if (data_.rows() < 2) throw InvalidArgument("Ensemble: need at least 2 realizations");
    if (static_cast<std::size_t>(data_.cols()) != kNumVariables * points) {
      throw DimensionMismatch("Ensemble: data has " + std::to_string(data_.cols()) +
                              " columns, expected " + std::to_string(kNumVariables * points));
    }
    if (!data_.allFinite()) throw InvalidArgument("Ensemble: non-finite values");
  }

  [[nodiscard]] std::size_t n_realizations() const { return static_cast<std::size_t>(data_.rows()); }
  [[nodiscard]] std::size_t n_steps() const { return sim_.steps(); }
  [[nodiscard]] std::size_t n_times() const { return sim_.steps() + 1; }
  [[nodiscard]] double dt() const { return sim_.dt; }
  [[nodiscard]] double time(std::size_t k) const { return static_cast<double>(k) * sim_.dt; }
  [[nodiscard]] std::uint64_t master_seed() const { return sim_.seed; }
  [[nodiscard]] const GridParams& grid() const { return grid_; }
  [[nodiscard]] const OuParams& ou() const { return ou_; }
  [[nodiscard]] const SimConfig& sim() const { return sim_; }
  [[nodiscard]] const Eigen::MatrixXd& data() const { return data_; }

  [[nodiscard]] std::vector<double> times() const {
    std::vector<double> t(n_times());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
    return t;
  }

  [[nodiscard]] Eigen::Index column_index(Variable v, std::size_t k) const {
    if (k >= n_times()) {
      throw IndexOutOfRange("time index " + std::to_string(k) + " outside [0, " +
                            std::to_string(n_steps()) + "]");
    }
    return static_cast<Eigen::Index>(static_cast<std::size_t>(v) * n_times() + k);
  }

  [[nodiscard]] double value(std::size_t n, Variable v, std::size_t k) const {
    return data_(static_cast<Eigen::Index>(n), column_index(v, k));
  }

  /// Realization `n` as a trajectory.
  [[nodiscard]] Trajectory trajectory(std::size_t n) const {
    if (n >= n_realizations()) throw IndexOutOfRange("realization index out of range");
    Trajectory t;
    t.stream = StreamId{master_seed(), n};
    t.times = times();
    t.states.resize(n_times());
    for (std::size_t k = 0; k < n_times(); ++k) {
      t.states[k] = {value(n, Variable::Theta, k), value(n, Variable::Omega, k),
                     value(n, Variable::PmPrime, k)};
    }
    return t;
  }

  /// Bitwise equality of data and metadata.
  friend bool operator==(const Ensemble& a, const Ensemble& b) {
    if (!(a.grid_ == b.grid_) || !(a.ou_ == b.ou_) || !(a.sim_ == b.sim_)) return false;
    if (a.data_.rows() != b.data_.rows() || a.data_.cols() != b.data_.cols()) return false;
    return std::equal(a.data_.data(), a.data_.data() + a.data_.size(), b.data_.data(),
                      [](double x, double y) {
                        return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
                      });
  }

private:
  GridParams grid_;
  OuParams ou_;
  SimConfig sim_;
  Eigen::MatrixXd data_;
};

/// Simulates `n` independent realizations keyed by (cfg.seed, index).
///
/// `threads == 0` uses the hardware concurrency. The result does not depend on
/// the thread count. On divergence, the failure with the smallest realization
/// index is rethrown.
[[nodiscard]] inline Ensemble run_ensemble(const GridParams& p, const OuParams& ou,
                                           const SimConfig& cfg, std::size_t n,
                                           unsigned threads = 0) {
  p.validate();
  ou.validate();
  cfg.validate();
  if (n < 2) throw InvalidArgument("run_ensemble: need n >= 2 realizations");

  const std::size_t points = cfg.steps() + 1;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n),
                       static_cast<Eigen::Index>(kNumVariables * points));

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::optional<std::size_t> failed_index;
  std::exception_ptr failure;

  auto worker = [&] {
    std::vector<StateVec> buffer(points);
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        NormalStream rng(StreamId{cfg.seed, i});
        integrate(p, ou, cfg, rng, [&](std::size_t k, const StateVec& s) { buffer[k] = s; });
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failed_index || i < *failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        failed.store(true);
        continue;
      }
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t k = 0; k < points; ++k) {
        data(row, static_cast<Eigen::Index>(k)) = buffer[k].theta;
        data(row, static_cast<Eigen::Index>(points + k)) = buffer[k].omega;
        data(row, static_cast<Eigen::Index>(2 * points + k)) = buffer[k].pm_prime;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return Ensemble(p, ou, cfg, std::move(data));
}

/// Prior moments over an ensemble. Means are computed once on first use;
/// covariance blocks are computed on demand and not cached.
class MomentView {
public:
  explicit MomentView(const Ensemble& ens) : ens_(&ens) {}

  [[nodiscard]] const Ensemble& ensemble() const { return *ens_; }

  [[nodiscard]] double mean(Variable v, std::size_t k) const {
    const Eigen::Index c = ens_->column_index(v, k);
    return means()(c);
  }

  [[nodiscard]] Eigen::VectorXd mean_vector(const IndexSet& idx) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Eigen::Index>(j)) = mean(idx[j].var, idx[j].k);
    return out;
  }

  /// Realization deviations from the ensemble mean for every entry of `idx` (N x |idx|).
  [[nodiscard]] Eigen::MatrixXd centered(const IndexSet& idx) const {
    const Eigen::VectorXd& mu = means();
    const Eigen::MatrixXd& data = ens_->data();
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const Eigen::Index c = ens_->column_index(idx[j].var, idx[j].k);
      out.col(static_cast<Eigen::Index>(j)) = data.col(c).array() - mu(c);
    }
    return out;
  }

  /// Unbiased sample covariance between every row entry and every column entry.
  ///
  /// Each element is a single dot product over realizations, so
  /// cov_block(a, b) is exactly the transpose of cov_block(b, a).
  [[nodiscard]] Eigen::MatrixXd cov_block(const IndexSet& rows, const IndexSet& cols) const {
    const Eigen::MatrixXd xr = centered(rows);
    if (rows == cols) return gram(xr, xr, true);
    const Eigen::MatrixXd xc = centered(cols);
    return gram(xr, xc, false);
  }

  /// Diagonal of cov_block(idx, idx).
  [[nodiscard]] Eigen::VectorXd variance(const IndexSet& idx) const {
    const Eigen::MatrixXd x = centered(idx);
    const double scale = 1.0 / static_cast<double>(x.rows() - 1);
    Eigen::VectorXd out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(j) = x.col(j).dot(x.col(j)) * scale;
    return out;
  }

private:
  const Eigen::VectorXd& means() const {
    // Shifted by the first realization: exact for constant columns and less
    // cancellation when the spread is small relative to the level.
    std::call_once(means_once_, [this] {
      const Eigen::MatrixXd& d = ens_->data();
      means_.resize(d.cols());
      for (Eigen::Index c = 0; c < d.cols(); ++c) {
        const double x0 = d(0, c);
        means_(c) = x0 + (d.col(c).array() - x0).mean();
      }
    });
    return means_;
  }

  static Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool symmetric) {
    const double scale = 1.0 / static_cast<double>(a.rows() - 1);
    Eigen::MatrixXd out(a.cols(), b.cols());
    constexpr Eigen::Index kTile = 48;
    for (Eigen::Index i0 = 0; i0 < a.cols(); i0 += kTile) {
      const Eigen::Index i1 = std::min(a.cols(), i0 + kTile);
      const Eigen::Index j_start = symmetric ? i0 : 0;
      for (Eigen::Index j = j_start; j < b.cols(); ++j) {
        for (Eigen::Index i = i0; i < i1; ++i) {
          if (symmetric && j < i) continue;
          out(i, j) = a.col(i).dot(b.col(j)) * scale;
          if (symmetric) out(j, i) = out(i, j);
        }
      }
    }
    return out;
  }

  const Ensemble* ens_;
  mutable std::once_flag means_once_;
  mutable Eigen::VectorXd means_;
};

[[nodiscard]] inline Eigen::VectorXd mean_vector(const MomentView& view, const IndexSet& idx) {
  return view.mean_vector(idx);
}

[[nodiscard]] inline Eigen::MatrixXd cov_block(const MomentView& view, const IndexSet& rows,
                                               const IndexSet& cols) {
  return view.cov_block(rows, cols);
}

}  // namespace swinggp
