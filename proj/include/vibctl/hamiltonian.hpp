#pragma once

// Two-channel Hamiltonian
//
//   H(eps) = | T + V_g      mu eps |
//            | mu eps       T + V_e |
//
// with a constant dipole mu and a real field. Channel blocks are stored in the
// weight-normalized representation u_j = sqrt(w_j) psi_j, where they are
// plain symmetric matrices.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "grid.hpp"
#include "potential.hpp"
#include "state.hpp"
#include "units.hpp"

namespace vibctl {

enum class Channel { Ground, Excited };

inline const char* channel_name(Channel c) { return c == Channel::Ground ? "ground" : "excited"; }

struct ChannelSystem {
  SpatialGrid grid;
  Eigen::VectorXd weights;  ///< w_j = J_j dx
  Eigen::VectorXd sqrt_w;
  Eigen::VectorXd v_g, v_e;  ///< potentials on the nodes (hartree)
  KineticOperator kinetic;
  Eigen::MatrixXd h_g, h_e;  ///< symmetric channel Hamiltonians
  double dipole = 1.0;
  bool shared_kinetic = false;  ///< h_c = kinetic + diag(v_c) for both channels
  std::optional<double> asymptote_g, asymptote_e;
  /// Extreme eigenvalues of each channel block, used for spectral bounds.
  double lambda_min_g = 0.0, lambda_max_g = 0.0, lambda_min_e = 0.0, lambda_max_e = 0.0;

  int n_points() const { return static_cast<int>(weights.size()); }
  const Eigen::MatrixXd& block(Channel c) const { return c == Channel::Ground ? h_g : h_e; }
  std::optional<double> asymptote(Channel c) const { return c == Channel::Ground ? asymptote_g : asymptote_e; }

  double norm2(const StateVector& s) const { return vibctl::norm2(weights, s); }
  cplx inner(const StateVector& a, const StateVector& b) const { return vibctl::inner(weights, a, b); }
};

namespace detail {
inline void finish_system(ChannelSystem& sys) {
  sys.sqrt_w = sys.weights.cwiseSqrt();
  auto extremes = [](const Eigen::MatrixXd& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalFailure("channel block eigenvalue solve failed");
    return std::pair{es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
  };
  std::tie(sys.lambda_min_g, sys.lambda_max_g) = extremes(sys.h_g);
  std::tie(sys.lambda_min_e, sys.lambda_max_e) = extremes(sys.h_e);
}
}  // namespace detail

inline ChannelSystem build_system(const PotentialCurve& g_curve, const PotentialCurve& e_curve,
                                  const SpatialGrid& grid, double mass, double dipole) {
  for (const auto* c : {&g_curve, &e_curve}) {
    if (!c->covers(grid.r_min, grid.r_max)) {
      throw InvalidInput("build_system: grid [" + std::to_string(grid.r_min) + ", " + std::to_string(grid.r_max) +
                         "] lies outside the '" + c->label() + "' table and no extrapolation tail is configured");
    }
  }
  ChannelSystem sys;
  sys.grid = grid;
  const auto w = grid.weights();
  sys.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  const int n = grid.n_points;
  sys.v_g.resize(n);
  sys.v_e.resize(n);
  for (int j = 0; j < n; ++j) {
    sys.v_g(j) = g_curve(grid.r[j]);
    sys.v_e(j) = e_curve(grid.r[j]);
  }
  sys.kinetic = kinetic_matrix(grid, mass);
  sys.h_g = sys.kinetic.matrix;
  sys.h_g.diagonal() += sys.v_g;
  sys.h_e = sys.kinetic.matrix;
  sys.h_e.diagonal() += sys.v_e;
  sys.dipole = dipole;
  sys.shared_kinetic = true;
  sys.asymptote_g = g_curve.asymptote();
  sys.asymptote_e = e_curve.asymptote();
  detail::finish_system(sys);
  return sys;
}

/// A system given directly by its channel blocks; the nodes are abstract
/// (positions 0..n-1, unit weights). With 1x1 blocks this is the two-level
/// reduction of the molecular problem.
inline ChannelSystem system_from_blocks(const Eigen::MatrixXd& h_g, const Eigen::MatrixXd& h_e, double dipole) {
  if (h_g.rows() != h_g.cols() || h_e.rows() != h_e.cols() || h_g.rows() != h_e.rows() || h_g.rows() == 0) {
    throw InvalidInput("system_from_blocks: blocks must be square and of equal size");
  }
  if ((h_g - h_g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h_g.cwiseAbs().maxCoeff()) ||
      (h_e - h_e.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h_e.cwiseAbs().maxCoeff())) {
    throw InvalidInput("system_from_blocks: blocks must be symmetric");
  }
  const auto n = static_cast<int>(h_g.rows());
  ChannelSystem sys;
  sys.grid.n_points = n;
  sys.grid.dx = 1.0;
  sys.grid.r_min = -1.0;
  sys.grid.r_max = n;
  sys.grid.r.resize(n);
  sys.grid.jacobian.assign(n, 1.0);
  for (int j = 0; j < n; ++j) sys.grid.r[j] = j;
  sys.weights = Eigen::VectorXd::Ones(n);
  sys.v_g = h_g.diagonal();
  sys.v_e = h_e.diagonal();
  sys.kinetic.matrix = Eigen::MatrixXd::Zero(n, n);
  sys.h_g = h_g;
  sys.h_e = h_e;
  sys.dipole = dipole;
  detail::finish_system(sys);
  return sys;
}

inline ChannelSystem two_level_system(double e_ground, double e_excited, double dipole) {
  return system_from_blocks(Eigen::MatrixXd::Constant(1, 1, e_ground), Eigen::MatrixXd::Constant(1, 1, e_excited),
                            dipole);
}

/// Rigorous enclosure of the spectrum of H(eps) for all |eps| <= eps_max.
inline std::pair<double, double> spectral_bounds(const ChannelSystem& sys, double eps_max) {
  if (!(eps_max >= 0.0)) throw InvalidInput("spectral_bounds: eps_max must be >= 0");
  const double coupling = std::abs(sys.dipole) * eps_max;
  return {std::min(sys.lambda_min_g, sys.lambda_min_e) - coupling,
          std::max(sys.lambda_max_g, sys.lambda_max_e) + coupling};
}

/// Eigenpairs of one channel. states.col(v) holds psi_v at the nodes,
/// normalized with the grid weights.
struct EigenBasis {
  Channel channel = Channel::Ground;
  Eigen::VectorXd energies;
  Eigen::MatrixXd states;
  int n_bound = 0;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(energies.size()); }
  Eigen::VectorXd state(int v) const { return states.col(v); }
};

inline EigenBasis eigenstates(const ChannelSystem& sys, Channel channel, int n_requested) {
  const int n = sys.n_points();
  if (n_requested < 1 || n_requested > n) {
    throw InvalidInput("eigenstates: n_requested must lie in [1, " + std::to_string(n) + "]");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.block(channel));
  if (es.info() != Eigen::Success) {
    throw NumericalFailure(std::string("eigenstates: diagonalization of the ") + channel_name(channel) +
                           " channel (" + std::to_string(n) + " points) failed");
  }
  EigenBasis basis;
  basis.channel = channel;
  basis.weights = sys.weights;
  basis.energies = es.eigenvalues().head(n_requested);
  basis.states.resize(n, n_requested);
  for (int v = 0; v < n_requested; ++v) {
    Eigen::VectorXd psi = es.eigenvectors().col(v).cwiseQuotient(sys.sqrt_w);
    const double peak = psi.cwiseAbs().maxCoeff();
    for (int j = 0; j < n; ++j) {
      if (std::abs(psi(j)) > 1e-3 * peak) {
        if (psi(j) < 0.0) psi = -psi;
        break;
      }
    }
    basis.states.col(v) = psi;
  }
  const auto asym = sys.asymptote(channel);
  basis.n_bound = 0;
  for (int v = 0; v < n_requested; ++v) {
    if (!asym || basis.energies(v) < *asym - 1e-12) ++basis.n_bound;
  }
  return basis;
}

struct FranckCondonTable {
  Eigen::MatrixXd factors;      ///< |<v_g|v'_e>|^2, rows v, columns v'
  Eigen::MatrixXd frequencies;  ///< E'_{v'} - E_v (hartree)
};

inline FranckCondonTable franck_condon_map(const EigenBasis& ground, const EigenBasis& excited) {
  if (ground.weights.size() != excited.weights.size() ||
      (ground.weights - excited.weights).cwiseAbs().maxCoeff() > 1e-14 * ground.weights.cwiseAbs().maxCoeff()) {
    throw InvalidInput("franck_condon_map: bases live on different grids");
  }
  FranckCondonTable t;
  const Eigen::MatrixXd overlap = ground.states.transpose() * ground.weights.asDiagonal() * excited.states;
  t.factors = overlap.cwiseAbs2();
  t.frequencies.resize(ground.size(), excited.size());
  for (int v = 0; v < ground.size(); ++v) {
    for (int w = 0; w < excited.size(); ++w) t.frequencies(v, w) = excited.energies(w) - ground.energies(v);
  }
  return t;
}

/// Matrix with a header row of v' indices, one row per v.
inline void write_fc_table(const std::string& path, const FranckCondonTable& t) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path);
  out << "# Franck-Condon factors |<v|v'>|^2; rows v (ground), columns v' (excited)\n# v";
  for (int w = 0; w < t.factors.cols(); ++w) out << ' ' << w;
  out << '\n' << std::setprecision(10);
  for (int v = 0; v < t.factors.rows(); ++v) {
    out << v;
    for (int w = 0; w < t.factors.cols(); ++w) out << ' ' << t.factors(v, w);
    out << '\n';
  }
  if (!out) throw IoFailure("write failed: " + path);
}

/// Two columns (transition frequency in cm^-1, FC factor) for ground level v.
inline void write_fc_column(const std::string& path, const FranckCondonTable& t, int v) {
  if (v < 0 || v >= t.factors.rows()) throw InvalidInput("write_fc_column: level out of range");
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path);
  out << "# v=" << v << "\n# frequency_cm1 fc\n" << std::setprecision(10);
  for (int w = 0; w < t.factors.cols(); ++w) {
    out << t.frequencies(v, w) * units::hartree_to_cm1 << ' ' << t.factors(v, w) << '\n';
  }
  if (!out) throw IoFailure("write failed: " + path);
}

}  // namespace vibctl
