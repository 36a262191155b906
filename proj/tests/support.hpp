#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's numerical code paths.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Params {
  double p_max = 2.1, h = 5.0, d = 5.0, pm = 0.9, wb = 120.0 * M_PI, ws = 1.0;
};

// Classical Heun step of the deterministic swing equation (no wind term).
inline void heun(double& theta, double& omega, const Params& p, double dt) {
  auto f = [&](double th, double om, double& dth, double& dom) {
    dth = p.wb * (om - p.ws);
    dom = p.ws / (2.0 * p.h) * (p.pm - p.p_max * std::sin(th) - p.d * (om - p.ws));
  };
  double k1a, k1b, k2a, k2b;
  f(theta, omega, k1a, k1b);
  f(theta + dt * k1a, omega + dt * k1b, k2a, k2b);
  theta += 0.5 * dt * (k1a + k2a);
  omega += 0.5 * dt * (k1b + k2b);
}

// Exact O-U transition: z' = z e^{-h/λ} + σ sqrt(1 − e^{-2h/λ}) ξ.
inline double ou_exact(double z, double sigma, double lambda, double h, double xi) {
  const double r = std::exp(-h / lambda);
  return z * r + sigma * std::sqrt(1.0 - r * r) * xi;
}

// Two-pass sample mean and unbiased covariance of columns a and b of x.
inline double mean(const std::vector<double>& col) {
  double s = 0.0;
  for (double v : col) s += v;
  return s / static_cast<double>(col.size());
}

inline double cov(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

// Gaussian conditioning by explicit inversion of C_oo.
struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Posterior brute_force(const Eigen::MatrixXd& joint, const Eigen::VectorXd& mu, int n_obs,
                             const Eigen::VectorXd& x_obs) {
  const int n = static_cast<int>(joint.rows());
  const int nf = n - n_obs;
  const Eigen::MatrixXd coo = joint.topLeftCorner(n_obs, n_obs);
  const Eigen::MatrixXd cof = joint.topRightCorner(n_obs, nf);
  const Eigen::MatrixXd cff = joint.bottomRightCorner(nf, nf);
  const Eigen::MatrixXd inv = coo.inverse();
  Posterior p;
  p.mean = mu.tail(nf) + cof.transpose() * inv * (x_obs - mu.head(n_obs));
  p.cov = cff - cof.transpose() * inv * cof;
  return p;
}

// Well-conditioned random SPD matrix: B Bᵀ / n + 0.5 I, scaled by `scale`.
inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = nd(rng);
  Eigen::MatrixXd a = b * b.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
  return scale * a;
}

inline double max_rel_dev(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ref) {
  const double denom = std::max(ref.cwiseAbs().maxCoeff(), 1e-300);
  return (a - ref).cwiseAbs().maxCoeff() / denom;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("swinggp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
