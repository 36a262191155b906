#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"
#include "swinggp/ensemble.hpp"

using namespace swinggp;

namespace {

SimConfig short_sim(double t_end) {
  SimConfig c;
  c.t_end = t_end;
  return c;
}

// Ensemble with arbitrary random data on a K-step grid (no dynamics).
Ensemble random_ensemble(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  SimConfig sim;
  sim.dt = 0.01;
  sim.t_end = static_cast<double>(k) * sim.dt;
  Eigen::MatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(3 * (k + 1)));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = 3.0 + nd(rng) * (1.0 + 0.01 * static_cast<double>(c));
  }
  return Ensemble(GridParams{}, OuParams{}, sim, std::move(data));
}

std::vector<double> column(const Ensemble& e, Variable v, std::size_t k) {
  std::vector<double> out;
  for (std::size_t r = 0; r < e.n_realizations(); ++r) out.push_back(e.value(r, v, k));
  return out;
}

// Bootstrap standard error of the sample covariance between two columns.
double bootstrap_se(const std::vector<double>& a, const std::vector<double>& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  const int reps = 300;
  std::vector<double> est;
  std::vector<double> ra(a.size()), rb(b.size());
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = pick(rng);
      ra[i] = a[j];
      rb[i] = b[j];
    }
    est.push_back(oracle::cov(ra, rb));
  }
  const double m = oracle::mean(est);
  double s = 0.0;
  for (double e : est) s += (e - m) * (e - m);
  return std::sqrt(s / (reps - 1));
}

}  // namespace

TEST(IndexSet, RejectsDuplicates) {
  EXPECT_THROW(IndexSet({{Variable::Theta, 3}, {Variable::Omega, 3}, {Variable::Theta, 3}}), InvalidArgument);
  EXPECT_NO_THROW(IndexSet({{Variable::Theta, 3}, {Variable::Omega, 3}}));
}

TEST(IndexSet, RangeAndConcat) {
  const IndexSet a = IndexSet::range(Variable::Omega, 2, 11, 3);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2].k, 8u);
  const IndexSet b = a.concat(IndexSet::range(Variable::PmPrime, 0, 2));
  EXPECT_EQ(b.size(), 5u);
  EXPECT_EQ(b[3].var, Variable::PmPrime);
  EXPECT_THROW((void)a.concat(a), InvalidArgument);
  EXPECT_TRUE(IndexSet::range(Variable::Theta, 5, 5).empty());
}

TEST(Ensemble, RequiresTwoRealizations) {
  EXPECT_THROW((void)run_ensemble(GridParams{}, OuParams{}, short_sim(0.1), 1), InvalidArgument);
  EXPECT_THROW(Ensemble(GridParams{}, OuParams{}, short_sim(0.1), Eigen::MatrixXd::Zero(1, 3 * 41)), InvalidArgument);
}

TEST(Ensemble, RejectsNonFiniteData) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 3 * 41);
  d(1, 7) = std::nan("");
  EXPECT_THROW(Ensemble(GridParams{}, OuParams{}, short_sim(0.1), d), InvalidArgument);
}

TEST(Ensemble, NoiselessRealizationsAreIdentical) {
  const Ensemble e = run_ensemble(GridParams{}, OuParams{0.0, 0.026}, short_sim(2.0), 5);
  for (std::size_t r = 1; r < 5; ++r) {
    EXPECT_EQ(e.data().row(static_cast<Eigen::Index>(r)), e.data().row(0));
  }
}

TEST(Ensemble, ParallelEqualsSerialBitwise) {
  const SimConfig sim = short_sim(2.0);
  const Ensemble serial = run_ensemble(GridParams{}, OuParams{}, sim, 37, 1);
  const Ensemble parallel = run_ensemble(GridParams{}, OuParams{}, sim, 37, 4);
  EXPECT_TRUE(serial == parallel);
  // Realization i is realization i of the keyed stream, whatever the ensemble size.
  const Trajectory t = simulate_realization(GridParams{}, OuParams{}, sim, 20);
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    ASSERT_EQ(serial.value(20, Variable::Theta, k), t.states[k].theta);
    ASSERT_EQ(serial.value(20, Variable::PmPrime, k), t.states[k].pm_prime);
  }
}

TEST(Ensemble, DivergenceNamesRealization) {
  GridParams p;
  p.omega_b = 1e10;
  SimConfig sim = short_sim(0.1);
  sim.init_omega = 1e300;
  try {
    (void)run_ensemble(p, OuParams{}, sim, 6, 3);
    FAIL() << "expected IntegrationDiverged";
  } catch (const IntegrationDiverged& e) {
    EXPECT_EQ(e.realization(), 0u);
  }
}

TEST(Ensemble, IndexOutOfRange) {
  const Ensemble e = random_ensemble(4, 10, 1);
  EXPECT_THROW((void)e.column_index(Variable::Omega, 11), IndexOutOfRange);
  const MomentView view(e);
  EXPECT_THROW((void)view.mean_vector(IndexSet({{Variable::Theta, 99}})), IndexOutOfRange);
  EXPECT_THROW((void)view.cov_block(IndexSet({{Variable::Theta, 0}}), IndexSet({{Variable::PmPrime, 11}})),
               IndexOutOfRange);
}

TEST(Moments, NoiselessMeanIsEquilibrium) {
  const GridParams p;
  SimConfig sim = short_sim(1.0);
  sim.init_theta = equilibrium_angle(p);
  const Ensemble e = run_ensemble(p, OuParams{0.0, 0.026}, sim, 7);
  const MomentView view(e);
  const Eigen::VectorXd m = view.mean_vector(IndexSet::range(Variable::Theta, 0, e.n_times(), 7));
  for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_NEAR(m(i), sim.init_theta, 1e-12);
}

TEST(Moments, MixedSetIsConcatenationOfScalarMeans) {
  const Ensemble e = random_ensemble(9, 20, 2);
  const MomentView view(e);
  const Eigen::VectorXd m = view.mean_vector(IndexSet({{Variable::Theta, 4}, {Variable::Omega, 13}}));
  EXPECT_NEAR(m(0), oracle::mean(column(e, Variable::Theta, 4)), 1e-14);
  EXPECT_NEAR(m(1), oracle::mean(column(e, Variable::Omega, 13)), 1e-14);
}

TEST(Moments, MatchTwoPassReferenceOnRandomEnsembles) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    const std::size_t k = 1 + rng() % 100;
    const Ensemble e = random_ensemble(n, k, rng());
    const MomentView view(e);
    std::vector<IndexEntry> entries;
    for (Variable v : kAllVariables) {
      for (std::size_t j = 0; j <= k; j += 1 + k / 6) entries.push_back({v, j});
    }
    const IndexSet idx(entries);
    const Eigen::VectorXd mean = view.mean_vector(idx);
    const Eigen::MatrixXd cov = view.cov_block(idx, idx);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const auto ca = column(e, idx[a].var, idx[a].k);
      EXPECT_NEAR(mean(static_cast<Eigen::Index>(a)), oracle::mean(ca), 1e-12 * std::abs(oracle::mean(ca)));
      for (std::size_t b = 0; b < idx.size(); ++b) {
        const double ref = oracle::cov(ca, column(e, idx[b].var, idx[b].k));
        EXPECT_NEAR(cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), ref,
                    1e-12 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

class ReferenceEnsemble : public ::testing::Test {
protected:
  static void SetUpTestSuite() { ens_ = new Ensemble(run_ensemble(GridParams{}, OuParams{}, SimConfig{}, 1000)); }
  static void TearDownTestSuite() {
    delete ens_;
    ens_ = nullptr;
  }
  static const Ensemble& ens() { return *ens_; }
  static Ensemble* ens_;
};

Ensemble* ReferenceEnsemble::ens_ = nullptr;

TEST_F(ReferenceEnsemble, WindMeanWithinCltBound) {
  const MomentView view(ens());
  // Pointwise bound, checked at times 1 s apart (well beyond the correlation time).
  const Eigen::VectorXd m = view.mean_vector(IndexSet::range(Variable::PmPrime, 400, ens().n_times(), 400));
  EXPECT_LT(m.cwiseAbs().maxCoeff(), 4.0 * 0.1 / std::sqrt(1000.0));
}

TEST_F(ReferenceEnsemble, SpreadRisesThenFlattens) {
  const MomentView view(ens());
  for (Variable v : {Variable::Theta, Variable::Omega}) {
    const Eigen::VectorXd sd = view.variance(IndexSet::range(v, 0, ens().n_times())).cwiseSqrt();
    const double late = sd.segment(8000, 2001).mean();  // 20–25 s
    EXPECT_EQ(sd(0), 0.0);
    EXPECT_LT(sd(40), 0.25 * late);                         // 0.1 s
    EXPECT_LT(sd.segment(400, 400).mean(), 0.9 * late);     // 1–2 s
    EXPECT_NEAR(sd.segment(6000, 2000).mean() / late, 1.0, 0.1);  // 15–20 s vs 20–25 s
  }
}

TEST_F(ReferenceEnsemble, CovarianceBlockStructure) {
  const MomentView view(ens());
  const IndexSet a = IndexSet::range(Variable::Theta, 2000, 2400, 10).concat(IndexSet::range(Variable::Omega, 2000, 2400, 10));
  const IndexSet b = IndexSet::range(Variable::PmPrime, 1990, 2100, 3);
  const Eigen::MatrixXd saa = view.cov_block(a, a);
  EXPECT_EQ(saa, saa.transpose());
  EXPECT_TRUE((saa.diagonal().array() >= 0.0).all());
  const Eigen::MatrixXd sab = view.cov_block(a, b);
  const Eigen::MatrixXd sba = view.cov_block(b, a);
  EXPECT_EQ(sab, sba.transpose());
  const double tau = saa.diagonal().maxCoeff();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(saa);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * tau);
  Eigen::MatrixXd nug = saa;
  nug.diagonal().array() += 1e-10 * tau;
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(nug).eigenvalues().minCoeff(), 0.0);
}

TEST_F(ReferenceEnsemble, CrossBlockMatchesTwoPass) {
  const MomentView view(ens());
  const IndexSet obs = IndexSet::range(Variable::Theta, 1000, 1100, 20);
  const IndexSet tgt = IndexSet::range(Variable::Omega, 1050, 1200, 30);
  const Eigen::MatrixXd c = view.cov_block(obs, tgt);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      const double ref = oracle::cov(column(ens(), Variable::Theta, obs[i].k), column(ens(), Variable::Omega, tgt[j].k));
      EXPECT_NEAR(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), ref, 1e-12 * std::abs(ref));
    }
  }
}

TEST_F(ReferenceEnsemble, WindAutocovarianceWithinBootstrapError) {
  const MomentView view(ens());
  const std::size_t k0 = 4000;
  for (std::size_t lag : {0u, 5u, 10u, 21u}) {
    const double c = view.cov_block(IndexSet({{Variable::PmPrime, k0}}), IndexSet({{Variable::PmPrime, k0 + lag}}))(0, 0);
    const double se = bootstrap_se(column(ens(), Variable::PmPrime, k0), column(ens(), Variable::PmPrime, k0 + lag), lag + 1);
    const double theory = 0.01 * std::exp(-static_cast<double>(lag) * 0.0025 / 0.026);
    EXPECT_LT(std::abs(c - theory), 3.0 * se) << "lag " << lag << " est " << c << " se " << se;
  }
}

TEST(Moments, EstimatorConsistencyAcrossEnsembleSizes) {
  const SimConfig sim = short_sim(2.0);
  const Ensemble small = run_ensemble(GridParams{}, OuParams{}, sim, 1000);
  const Ensemble big = run_ensemble(GridParams{}, OuParams{}, sim, 4000);
  const MomentView vs(small), vb(big);
  const std::pair<IndexEntry, IndexEntry> pairs[] = {
      {{Variable::Theta, 400}, {Variable::Theta, 400}},
      {{Variable::Theta, 400}, {Variable::Omega, 600}},
      {{Variable::PmPrime, 500}, {Variable::Theta, 700}},
      {{Variable::Omega, 800}, {Variable::Omega, 790}},
  };
  std::uint64_t seed = 5;
  for (const auto& [a, b] : pairs) {
    const IndexSet ia({a}), ib({b});
    const double cs = vs.cov_block(ia, ib)(0, 0);
    const double cb = vb.cov_block(ia, ib)(0, 0);
    const double se_s = bootstrap_se(column(small, a.var, a.k), column(small, b.var, b.k), ++seed);
    const double se_b = bootstrap_se(column(big, a.var, a.k), column(big, b.var, b.k), ++seed);
    EXPECT_LT(std::abs(cs - cb), 4.0 * std::hypot(se_s, se_b));
  }
}
