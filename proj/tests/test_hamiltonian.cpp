#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "models.hpp"
#include "vibctl/hamiltonian.hpp"

using namespace vibctl;

namespace {

ChannelSystem morse_pair(int n, double e_max) {
  const auto v = PotentialCurve::morse(0.02, 0.8, 5.0);
  GridSpec gs;
  gs.n_points = n;
  gs.r_min = 3.0;
  gs.r_max = 30.0;
  gs.e_max = e_max;
  gs.mass = 20000.0;
  return build_system(v, v, build_mapped_grid(v, gs), 20000.0, 1.0);
}

}  // namespace

TEST(Eigenstates, MorseLevelsMatchClosedForm) {
  const auto sys = morse_pair(512, 0.1);
  const auto b = eigenstates(sys, Channel::Ground, 40);
  for (int v = 0; v < 10; ++v) {
    const double exact = fixtures::morse_level(0.02, 0.8, 20000.0, v);
    EXPECT_LT(std::abs(b.energies(v) - exact) / exact, 1e-7) << "v=" << v;
  }
  const double lambda = std::sqrt(2.0 * 20000.0 * 0.02) / 0.8;
  EXPECT_EQ(b.n_bound, static_cast<int>(std::floor(lambda - 0.5)) + 1);
}

TEST(Eigenstates, ThousandPointsResolveSixtySixLevels) {
  // Sodium-dimer-sized well: lambda = 66.5 gives 66 bound levels.
  const double mass = 20963.0, depth = 0.0275, lambda = 66.5;
  const double range = std::sqrt(2.0 * mass * depth) / lambda;
  const auto v = PotentialCurve::morse(depth, range, 5.8);
  GridSpec gs;
  gs.n_points = 1024;
  gs.r_min = 4.0;
  gs.r_max = 60.0;
  gs.e_max = 0.08;
  gs.mass = mass;
  const auto sys = build_system(v, v, build_mapped_grid(v, gs), mass, 1.0);
  const auto b = eigenstates(sys, Channel::Ground, 80);
  EXPECT_EQ(b.n_bound, 66);
  for (int w = 0; w < 66; ++w) {
    const double exact = fixtures::morse_level(depth, range, mass, w);
    EXPECT_LT(std::abs(b.energies(w) - exact), 1e-4 * (depth - exact) + 1e-9) << "v=" << w;
  }
}

TEST(Eigenstates, OrthonormalInWeightedProduct) {
  const auto sys = morse_pair(128, 0.1);
  const auto b = eigenstates(sys, Channel::Ground, 20);
  const Eigen::MatrixXd gram = b.states.transpose() * sys.weights.asDiagonal() * b.states;
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(gram(i, i), 1.0, 1e-12);
    for (int j = 0; j < i; ++j) EXPECT_NEAR(gram(i, j), 0.0, 1e-11);
  }
}

TEST(Eigenstates, BoxLevelsScaleQuadratically) {
  const auto g = uniform_grid(96, 0.0, 4.0);
  const auto flat = PotentialCurve::constant(0.0);
  const auto sys = build_system(flat, flat, g, 1.0, 1.0);
  const auto b = eigenstates(sys, Channel::Excited, 6);
  for (int v = 0; v < 6; ++v) EXPECT_NEAR(b.energies(v) / b.energies(0), (v + 1.0) * (v + 1.0), 1e-8 * (v + 1) * (v + 1));
}

TEST(Eigenstates, RejectsBadCount) {
  const auto sys = two_level_system(0.0, 1.0, 1.0);
  EXPECT_THROW(eigenstates(sys, Channel::Ground, 0), InvalidInput);
  EXPECT_THROW(eigenstates(sys, Channel::Ground, 2), InvalidInput);
}

TEST(ChannelSystem, IdenticalCurvesGiveIdenticalBlocks) {
  const auto sys = morse_pair(64, 0.1);
  EXPECT_EQ((sys.h_g - sys.h_e).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ChannelSystem, RejectsGridOutsideTable) {
  std::vector<PotentialCurve::Sample> table;
  for (int i = 0; i < 12; ++i) table.emplace_back(3.0 + i, 0.001 * (i - 3) * (i - 3));
  const auto tab = PotentialCurve::from_table(table, "tabulated");
  const auto g = uniform_grid(32, 2.0, 20.0);
  try {
    build_system(tab, tab, g, 1000.0, 1.0);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("tabulated"), std::string::npos);
  }
}

TEST(FranckCondon, IdenticalPotentialsGiveIdentity) {
  const auto sys = morse_pair(128, 0.1);
  const auto g = eigenstates(sys, Channel::Ground, 15);
  const auto e = eigenstates(sys, Channel::Excited, 15);
  const auto fc = franck_condon_map(g, e);
  EXPECT_LT((fc.factors - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FranckCondon, DisplacedOscillatorsFollowPoisson) {
  const double mass = 1000.0, omega = 0.01, shift = 0.3;
  const double k = mass * omega * omega;
  const auto vg = PotentialCurve::harmonic(k, 5.0);
  const auto ve = PotentialCurve::harmonic(k, 5.0 + shift, 0.1);
  const auto grid = uniform_grid(256, 2.0, 8.0);
  const auto sys = build_system(vg, ve, grid, mass, 1.0);
  const auto g = eigenstates(sys, Channel::Ground, 10);
  const auto e = eigenstates(sys, Channel::Excited, 10);
  const auto fc = franck_condon_map(g, e);
  const double s = 0.5 * mass * omega * shift * shift;  // Huang-Rhys factor
  double factorial = 1.0;
  for (int w = 0; w < 8; ++w) {
    if (w > 0) factorial *= w;
    EXPECT_NEAR(fc.factors(0, w), std::exp(-s) * std::pow(s, w) / factorial, 1e-8) << "v'=" << w;
  }
}

TEST(FranckCondon, RowSumsBoundedAndCompleteWithAllLevels) {
  const auto l = fixtures::make_ladder(64);
  for (int v = 0; v < l.fc.factors.rows(); ++v) EXPECT_LE(l.fc.factors.row(v).sum(), 1.0 + 1e-12);
  const auto g = eigenstates(*l.system, Channel::Ground, 10);
  const auto e = eigenstates(*l.system, Channel::Excited, 64);
  const auto full = franck_condon_map(g, e);
  for (int v = 0; v < 10; ++v) EXPECT_NEAR(full.factors.row(v).sum(), 1.0, 1e-10);
}

TEST(SpectralBounds, EnclosesDirectDiagonalization) {
  const auto l = fixtures::make_ladder(64);
  const auto& sys = *l.system;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int trial = 0; trial < 5; ++trial) {
    const double eps = u(rng);
    const int n = sys.n_points();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    h.topLeftCorner(n, n) = sys.h_g;
    h.bottomRightCorner(n, n) = sys.h_e;
    h.topRightCorner(n, n) = sys.dipole * eps * Eigen::MatrixXd::Identity(n, n);
    h.bottomLeftCorner(n, n) = sys.dipole * eps * Eigen::MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const auto [lo, hi] = spectral_bounds(sys, std::abs(eps));
    EXPECT_GE(es.eigenvalues().minCoeff(), lo - 1e-12);
    EXPECT_LE(es.eigenvalues().maxCoeff(), hi + 1e-12);
  }
}

TEST(SpectralBounds, WidenWithFieldAndStartAtKineticMinimum) {
  const auto flat = PotentialCurve::constant(0.0);
  const auto sys = build_system(flat, flat, uniform_grid(64, 0.0, 10.0), 1.0, 1.0);
  const auto [lo0, hi0] = spectral_bounds(sys, 0.0);
  EXPECT_NEAR(lo0, units::pi * units::pi / 200.0, 1e-9);
  EXPECT_GE(lo0, 0.0);
  double prev_lo = lo0, prev_hi = hi0;
  for (double e : {0.01, 0.1, 1.0}) {
    const auto [lo, hi] = spectral_bounds(sys, e);
    EXPECT_LE(lo, prev_lo);
    EXPECT_GE(hi, prev_hi);
    prev_lo = lo;
    prev_hi = hi;
  }
  EXPECT_THROW(spectral_bounds(sys, -1.0), InvalidInput);
}
