#pragma once

#include <complex>

#include <Eigen/Dense>

#include "errors.hpp"

namespace vibctl {

using cplx = std::complex<double>;

/// Two-component wave function (ground, excited) sampled at the grid nodes.
/// Norm convention: sum_j w_j (|g_j|^2 + |e_j|^2) with the grid weights w.
struct StateVector {
  Eigen::VectorXcd g;
  Eigen::VectorXcd e;

  StateVector() = default;
  explicit StateVector(Eigen::Index n) : g(Eigen::VectorXcd::Zero(n)), e(Eigen::VectorXcd::Zero(n)) {}
  StateVector(Eigen::VectorXcd ground, Eigen::VectorXcd excited) : g(std::move(ground)), e(std::move(excited)) {}

  Eigen::Index size() const { return g.size(); }

  /// Ground-channel state built from a real grid function.
  static StateVector ground_only(const Eigen::VectorXd& psi) {
    StateVector s(psi.size());
    s.g = psi.cast<cplx>();
    return s;
  }
  static StateVector excited_only(const Eigen::VectorXd& psi) {
    StateVector s(psi.size());
    s.e = psi.cast<cplx>();
    return s;
  }

  StateVector& operator*=(cplx a) {
    g *= a;
    e *= a;
    return *this;
  }
};

inline StateVector operator*(cplx a, StateVector s) { return s *= a; }

inline StateVector operator-(const StateVector& a, const StateVector& b) {
  return StateVector(a.g - b.g, a.e - b.e);
}

/// Weighted inner product <a|b> (antilinear in a).
inline cplx inner(const Eigen::VectorXd& w, const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return (a.conjugate().array() * b.array() * w.array()).sum();
}

inline cplx inner(const Eigen::VectorXd& w, const StateVector& a, const StateVector& b) {
  if (a.size() != w.size() || b.size() != w.size()) throw InvalidInput("inner: state/grid size mismatch");
  return inner(w, a.g, b.g) + inner(w, a.e, b.e);
}

inline double channel_norm2(const Eigen::VectorXd& w, const Eigen::VectorXcd& a) {
  return (a.array().abs2() * w.array()).sum();
}

inline double norm2(const Eigen::VectorXd& w, const StateVector& a) {
  return channel_norm2(w, a.g) + channel_norm2(w, a.e);
}

/// <a| mu_hat |b> with mu_hat = mu * sigma_x in channel space.
inline cplx dipole_matrix_element(const Eigen::VectorXd& w, double mu, const StateVector& a,
                                  const StateVector& b) {
  return mu * (inner(w, a.g, b.e) + inner(w, a.e, b.g));
}

}  // namespace vibctl
