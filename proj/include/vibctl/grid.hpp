#pragma once

// Mapped radial grid and the sine-basis kinetic-energy operator.
//
// The physical coordinate r is obtained from a uniform auxiliary coordinate x
// that spans the same interval [r_min, r_max]. Local point density follows the
// semiclassical momentum of the envelope potential at energy e_max, so deep
// wells get fine sampling while flat long-range regions stay coarse. The sine
// basis places Dirichlet walls at r_min and r_max; the n grid points are the
// interior nodes x_j = r_min + j dx, dx = (r_max - r_min) / (n + 1).

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"
#include "potential.hpp"
#include "units.hpp"

namespace vibctl {

struct GridSpec {
  int n_points = 256;
  double r_min = 0.0;
  double r_max = 0.0;
  double e_max = 0.0;     ///< envelope cutoff energy (hartree)
  double beta = 1.3;      ///< oversampling factor used for the resolution estimate
  double mass = 1.0;      ///< reduced mass (electron masses)
  double p_floor = 1e-8;  ///< floor on e_max - V (hartree)
};

/// Monotone map x -> r with dr/dx = jacobian. Evaluable anywhere in the box.
class MappedCoordinate {
 public:
  MappedCoordinate(PotentialCurve envelope, double e_max, double mass, double p_floor, double r_min,
                   double r_max)
      : envelope_(std::move(envelope)),
        e_max_(e_max),
        mass_(mass),
        p_floor_(p_floor),
        r_min_(r_min),
        r_max_(r_max) {
    const double width = (r_max_ - r_min_) / kPanels;
    panel_edges_.resize(kPanels + 1);
    cumulative_.assign(kPanels + 1, 0.0);
    for (int k = 0; k <= kPanels; ++k) panel_edges_[k] = r_min_ + k * width;
    panel_edges_.back() = r_max_;
    for (int k = 0; k < kPanels; ++k) {
      cumulative_[k + 1] = cumulative_[k] + integrate(panel_edges_[k], panel_edges_[k + 1]);
    }
    total_ = cumulative_.back();
    if (!(total_ > 0.0) || !std::isfinite(total_)) throw NumericalFailure("grid mapping: degenerate density");
  }

  /// Local momentum sqrt(2m max(e_max - V, p_floor)).
  double momentum(double r) const {
    return std::sqrt(2.0 * mass_ * std::max(e_max_ - envelope_(r), p_floor_));
  }

  /// Integral of the local momentum over [r_min, r_max].
  double action() const { return total_; }

  double x_of_r(double r) const { return r_min_ + (r_max_ - r_min_) * cumulative(r) / total_; }

  double r_of_x(double x) const {
    if (x <= r_min_) return r_min_;
    if (x >= r_max_) return r_max_;
    const double target = (x - r_min_) / (r_max_ - r_min_) * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto k = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0,
                                                                       kPanels - 1));
    double lo = panel_edges_[k], hi = panel_edges_[k + 1];
    // Newton on s(r) = target, safeguarded by bisection on the panel.
    double r = lo + (hi - lo) * (target - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
    for (int iter = 0; iter < 60; ++iter) {
      const double f = cumulative_[k] + integrate(panel_edges_[k], r) - target;
      if (f > 0.0) hi = r; else lo = r;
      const double step = f / momentum(r);
      double next = r - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - r) <= 1e-15 * std::max(1.0, std::abs(r))) return next;
      r = next;
    }
    return r;
  }

  double jacobian_at_r(double r) const { return total_ / ((r_max_ - r_min_) * momentum(r)); }
  double jacobian_of_x(double x) const { return jacobian_at_r(r_of_x(x)); }

 private:
  static constexpr int kPanels = 2048;

  double integrate(double a, double b) const {
    if (b <= a) return 0.0;
    auto f = [this](double r) { return momentum(r); };
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
  }

  double cumulative(double r) const {
    if (r <= r_min_) return 0.0;
    if (r >= r_max_) return total_;
    auto it = std::upper_bound(panel_edges_.begin(), panel_edges_.end(), r);
    const auto k = static_cast<std::size_t>(it - panel_edges_.begin() - 1);
    return cumulative_[k] + integrate(panel_edges_[k], r);
  }

  PotentialCurve envelope_;
  double e_max_, mass_, p_floor_, r_min_, r_max_;
  std::vector<double> panel_edges_;
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

struct SpatialGrid {
  int n_points = 0;
  std::vector<double> r;         ///< interior nodes (bohr), strictly increasing
  std::vector<double> jacobian;  ///< dr/dx at the nodes
  double r_min = 0.0, r_max = 0.0;
  double beta = 1.0;
  double e_max = 0.0;
  double dx = 0.0;              ///< uniform spacing of the auxiliary coordinate
  double jacobian_lo = 1.0;     ///< dr/dx at the r_min wall
  double jacobian_hi = 1.0;     ///< dr/dx at the r_max wall
  double required_points = 0.0; ///< beta * (integral of local momentum) / pi
  std::shared_ptr<const MappedCoordinate> map;  ///< null for uniform grids

  /// Quadrature weights J_j dx; every inner product is a weighted sum with these.
  std::vector<double> weights() const {
    std::vector<double> w(jacobian.size());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = jacobian[j] * dx;
    return w;
  }

  double box_length() const { return r_max - r_min; }
};

namespace detail {
inline void check_grid_spec(int n_points, double r_min, double r_max) {
  if (n_points < 16) throw InvalidInput("grid: n_points must be at least 16");
  if (!(r_max > r_min)) throw InvalidInput("grid: r_max must exceed r_min");
}
}  // namespace detail

inline SpatialGrid uniform_grid(int n_points, double r_min, double r_max) {
  detail::check_grid_spec(n_points, r_min, r_max);
  SpatialGrid g;
  g.n_points = n_points;
  g.r_min = r_min;
  g.r_max = r_max;
  g.dx = (r_max - r_min) / (n_points + 1);
  g.r.resize(n_points);
  g.jacobian.assign(n_points, 1.0);
  for (int j = 0; j < n_points; ++j) g.r[j] = r_min + (j + 1) * g.dx;
  return g;
}

/// Grid whose density follows sqrt(2m max(e_max - V_env, p_floor)).
inline SpatialGrid build_mapped_grid(const PotentialCurve& envelope, const GridSpec& spec) {
  detail::check_grid_spec(spec.n_points, spec.r_min, spec.r_max);
  if (!(spec.beta >= 1.0)) throw InvalidInput("grid: beta must be >= 1");
  if (!(spec.mass > 0.0)) throw InvalidInput("grid: mass must be positive");
  if (!envelope.covers(spec.r_min, spec.r_max)) {
    throw InvalidInput("grid: envelope potential '" + envelope.label() + "' does not cover [r_min, r_max]");
  }
  // Coarse scan for the envelope minimum.
  double v_min = envelope(spec.r_min);
  const int scan = 4096;
  for (int i = 0; i <= scan; ++i) {
    const double r = spec.r_min + (spec.r_max - spec.r_min) * i / scan;
    const double v = envelope(r);
    if (!std::isfinite(v)) throw InvalidInput("grid: envelope potential is not finite at r=" + std::to_string(r));
    v_min = std::min(v_min, v);
  }
  if (!(spec.e_max > v_min)) throw InvalidInput("grid: e_max lies below the envelope minimum");

  auto map = std::make_shared<MappedCoordinate>(envelope, spec.e_max, spec.mass, spec.p_floor,
                                                spec.r_min, spec.r_max);
  SpatialGrid g;
  g.n_points = spec.n_points;
  g.r_min = spec.r_min;
  g.r_max = spec.r_max;
  g.beta = spec.beta;
  g.e_max = spec.e_max;
  g.dx = (spec.r_max - spec.r_min) / (spec.n_points + 1);
  g.r.resize(spec.n_points);
  g.jacobian.resize(spec.n_points);
  for (int j = 0; j < spec.n_points; ++j) {
    g.r[j] = map->r_of_x(spec.r_min + (j + 1) * g.dx);
    g.jacobian[j] = map->jacobian_at_r(g.r[j]);
  }
  g.jacobian_lo = map->jacobian_at_r(spec.r_min);
  g.jacobian_hi = map->jacobian_at_r(spec.r_max);
  g.required_points = spec.beta * map->action() / units::pi;
  g.map = std::move(map);
  for (int j = 1; j < spec.n_points; ++j) {
    if (!(g.r[j] > g.r[j - 1])) throw NumericalFailure("grid: mapped nodes are not strictly increasing");
  }
  return g;
}

struct KineticOperator {
  Eigen::MatrixXd matrix;  ///< symmetric, in the weight-normalized representation
  double mass = 1.0;
};

/// Dense -1/(2m) d^2/dr^2 in the sine basis of the auxiliary coordinate.
///
/// Built as the quadratic form (1/2m) \int (dx/dr) |d psi/dx|^2 dx: the sine
/// interpolant of the nodal values is differentiated exactly and the product
/// is integrated by the trapezoid rule on the cosine nodes (walls included),
/// which is exact for the uniform box. The result acts on u_j = sqrt(w_j) psi_j.
inline KineticOperator kinetic_matrix(const SpatialGrid& grid, double mass) {
  if (!(mass > 0.0)) throw InvalidInput("kinetic_matrix: mass must be positive");
  const int n = grid.n_points;
  if (n < 1 || static_cast<int>(grid.jacobian.size()) != n) throw InvalidInput("kinetic_matrix: invalid grid");
  const double theta = units::pi / (n + 1);
  const double box = (n + 1) * grid.dx;

  // Nodal values -> derivative of the sine interpolant at the cosine nodes.
  Eigen::MatrixXd analysis(n, n);  // sine coefficients, scaled by k pi / L
  for (int k = 1; k <= n; ++k) {
    const double scale = (2.0 / (n + 1)) * (k * units::pi / box);
    for (int j = 1; j <= n; ++j) analysis(k - 1, j - 1) = scale * std::sin(k * j * theta);
  }
  Eigen::MatrixXd synthesis(n + 2, n);
  for (int q = 0; q <= n + 1; ++q) {
    for (int k = 1; k <= n; ++k) synthesis(q, k - 1) = std::cos(k * q * theta);
  }
  Eigen::MatrixXd deriv = synthesis * analysis;

  const auto w = grid.weights();
  for (int j = 0; j < n; ++j) deriv.col(j) /= std::sqrt(w[j]);

  Eigen::VectorXd quad(n + 2);
  for (int q = 0; q <= n + 1; ++q) {
    double jac = (q == 0) ? grid.jacobian_lo : (q == n + 1) ? grid.jacobian_hi : grid.jacobian[q - 1];
    quad(q) = grid.dx * ((q == 0 || q == n + 1) ? 0.5 : 1.0) / jac;
  }
  KineticOperator op;
  op.mass = mass;
  op.matrix = (deriv.transpose() * quad.asDiagonal() * deriv) / (2.0 * mass);
  op.matrix = 0.5 * (op.matrix + op.matrix.transpose()).eval();
  return op;
}

}  // namespace vibctl
