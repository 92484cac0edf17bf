#pragma once

// Krotov optimization of a state-to-state transfer.
//
// Objective  F = |<phi_f| U(T,0; eps) |phi_i>|^2
// Functional J = -F + \int g(eps) dt
//
// One iteration: propagate phi_f backward under the old field and store
// gamma(t_k); then sweep forward, computing the new field sample at the
// staggered time t_k + dt/2 from psi(t_k) (already propagated under the new
// field) and gamma(t_k), and only then advancing psi to t_{k+1}.
//
// With G(t) = Im[c* <gamma(t)|mu|psi(t)>], c = <phi_f|psi_old(T)>, the updates are
//   quadratic   g = alpha/S (eps - eps_old)^2:   eps_new = eps_old + (S/alpha) G
//   restricted  g = (a1/S)(eps - eps_old)^2 - (a2/S)(eps - eps_ref)^2:
//               eps_new = (a1 eps_old - a2 eps_ref + S G) / (a1 - a2)

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "hamiltonian.hpp"
#include "propagator.hpp"
#include "state.hpp"

namespace vibctl {

inline constexpr double kShapeFloor = 1e-8;

struct ControlProblem {
  std::shared_ptr<const ChannelSystem> system;
  StateVector initial;
  StateVector target;
  TimeGrid tgrid;
};

inline ControlProblem make_problem(std::shared_ptr<const ChannelSystem> sys, StateVector initial, StateVector target,
                                   TimeGrid tg) {
  if (!sys) throw InvalidInput("control problem: no system");
  if (initial.size() != sys->n_points() || target.size() != sys->n_points()) {
    throw InvalidInput("control problem: state size does not match the system");
  }
  if (std::abs(sys->norm2(initial) - 1.0) > 1e-9 || std::abs(sys->norm2(target) - 1.0) > 1e-9) {
    throw InvalidInput("control problem: initial and target states must be unit-normalized");
  }
  return ControlProblem{std::move(sys), std::move(initial), std::move(target), tg};
}

/// Transfer between two ground-channel eigenstates.
inline ControlProblem make_vibrational_problem(std::shared_ptr<const ChannelSystem> sys, const EigenBasis& ground,
                                               int v_initial, int v_target, TimeGrid tg) {
  if (ground.channel != Channel::Ground) throw InvalidInput("vibrational problem: basis must be the ground channel");
  for (int v : {v_initial, v_target}) {
    if (v < 0 || v >= ground.size()) throw InvalidInput("vibrational problem: level " + std::to_string(v) + " not computed");
  }
  return make_problem(std::move(sys), StateVector::ground_only(ground.state(v_initial)),
                      StateVector::ground_only(ground.state(v_target)), tg);
}

/// Two-phase alpha: `small` before `switch_iteration`, `large` from then on.
struct AlphaSchedule {
  double small = 1.0;
  double large = 10.0;
  int switch_iteration = 30;

  static AlphaSchedule constant(double a) { return {a, a, 0}; }
  double at(int iteration) const { return iteration < switch_iteration ? small : large; }
};

enum class PenaltyKind { Quadratic, Restricted };

struct PenaltySettings {
  PenaltyKind kind = PenaltyKind::Quadratic;
  AlphaSchedule alpha;            ///< alpha (quadratic) or alpha_01 (restricted)
  double alpha2_fraction = 0.0;   ///< restricted: alpha_02 = fraction * alpha_01, fraction in [0, 1)
  std::vector<double> reference;  ///< restricted: eps_ref on the field grid

  double alpha1(int iteration) const { return alpha.at(iteration); }
  double alpha2(int iteration) const { return kind == PenaltyKind::Restricted ? alpha2_fraction * alpha.at(iteration) : 0.0; }
};

namespace detail {
inline double gated_shape(double s) { return std::max(s, kShapeFloor); }

inline void check_same_grid(const ControlField& a, const ControlField& b, const char* what) {
  if (!(a.tgrid == b.tgrid)) throw InvalidInput(std::string(what) + ": fields live on different time grids");
}

/// g(eps) at one time for either penalty; eps0 is the previous-iteration field.
inline double penalty_density(double eps, double eps0, double eps_ref, double s, double a1, double a2) {
  if (s == 0.0) {
    if (eps != eps0) throw InvalidInput("penalty: field changed where the shape function vanishes");
    return 0.0;
  }
  const double inv = 1.0 / gated_shape(s);
  return a1 * inv * (eps - eps0) * (eps - eps0) - a2 * inv * (eps - eps_ref) * (eps - eps_ref);
}

inline double penalty_slope(double eps, double eps0, double eps_ref, double s, double a1, double a2) {
  if (s == 0.0) return 0.0;
  const double inv = 1.0 / gated_shape(s);
  return 2.0 * a1 * inv * (eps - eps0) - 2.0 * a2 * inv * (eps - eps_ref);
}
}  // namespace detail

/// \int alpha/S (eps_new - eps_old)^2 dt on the staggered grid.
inline double penalty_quadratic(const ControlField& field_new, const ControlField& field_old, double alpha) {
  detail::check_same_grid(field_new, field_old, "penalty_quadratic");
  if (field_new.shape != field_old.shape) throw InvalidInput("penalty_quadratic: shape functions differ");
  if (!(alpha > 0.0)) throw InvalidInput("penalty_quadratic: alpha must be positive");
  double sum = 0.0;
  for (int k = 0; k < field_new.size(); ++k) {
    sum += detail::penalty_density(field_new.values[k], field_old.values[k], 0.0, field_new.shape[k], alpha, 0.0);
  }
  return sum * field_new.tgrid.dt;
}

inline void check_restricted_alphas(double alpha1, double alpha2) {
  if (!(alpha2 >= 0.0)) throw InvalidInput("restricted penalty: alpha_02 must be >= 0");
  if (!(alpha1 > alpha2)) {
    throw InvalidInput("restricted penalty: alpha_01 must exceed alpha_02 (monotonic convergence is lost otherwise)");
  }
}

/// \int [a1/S (eps - eps_old)^2 - a2/S (eps - eps_ref)^2] dt.
inline double penalty_restricted(const ControlField& field_new, const ControlField& field_old,
                                 const std::vector<double>& reference, double alpha1, double alpha2) {
  detail::check_same_grid(field_new, field_old, "penalty_restricted");
  check_restricted_alphas(alpha1, alpha2);
  if (static_cast<int>(reference.size()) != field_new.size()) throw InvalidInput("penalty_restricted: reference size mismatch");
  double sum = 0.0;
  for (int k = 0; k < field_new.size(); ++k) {
    sum += detail::penalty_density(field_new.values[k], field_old.values[k], reference[k], field_new.shape[k], alpha1,
                                   alpha2);
  }
  return sum * field_new.tgrid.dt;
}

/// New field sample from the old one and G = Im[c* <gamma|mu|psi>].
inline double quadratic_update(double eps_old, double shape, double alpha, double gradient) {
  return eps_old + shape / alpha * gradient;
}

inline double restricted_update(double eps_old, double eps_ref, double shape, double alpha1, double alpha2,
                                double gradient) {
  if (shape == 0.0) return eps_old;
  return (alpha1 * eps_old - alpha2 * eps_ref + shape * gradient) / (alpha1 - alpha2);
}

/// One record per iteration; iteration 0 describes the guess.
struct IterationRecord {
  int iteration = 0;
  double F = 0.0;
  double J = 0.0;
  double penalty = 0.0;       ///< \int g(eps_new; eps_old) dt
  double J_previous = 0.0;    ///< -F_old + \int g(eps_old; eps_old) dt, the value J must not exceed
  double delta1 = 0.0;
  double min_delta2 = 0.0;
  double alpha = 0.0;
};

struct KrotovRun {
  std::vector<IterationRecord> records;
  ControlField field;       ///< last field
  ControlField best_field;  ///< highest F seen
  double best_F = 0.0;
  std::string stop_reason;

  double final_F() const { return records.empty() ? 0.0 : records.back().F; }
};

/// <phi_f| U(T,0; eps) |phi_i>.
inline cplx krotov_coefficient(const ControlProblem& p, const ControlField& field, PropagationOptions opts = {}) {
  const StateVector psi_T = propagate(p.initial, field, *p.system, p.tgrid, nullptr, opts);
  return p.system->inner(p.target, psi_T);
}

inline double objective(const ControlProblem& p, const ControlField& field, PropagationOptions opts = {}) {
  return std::norm(krotov_coefficient(p, field, opts));
}

/// Delta_2(t) = -g(eps_new) + g(eps_old) + (eps_new - eps_old) dg/deps|eps_new at every field sample.
inline std::vector<double> delta2_profile(const ControlField& field_new, const ControlField& field_old,
                                          const PenaltySettings& pen, int iteration) {
  detail::check_same_grid(field_new, field_old, "delta2_profile");
  const double a1 = pen.alpha1(iteration), a2 = pen.alpha2(iteration);
  std::vector<double> out(field_new.size());
  for (int k = 0; k < field_new.size(); ++k) {
    const double e1 = field_new.values[k], e0 = field_old.values[k], s = field_new.shape[k];
    const double ref = pen.kind == PenaltyKind::Restricted ? pen.reference[k] : 0.0;
    out[k] = -detail::penalty_density(e1, e0, ref, s, a1, a2) + detail::penalty_density(e0, e0, ref, s, a1, a2) +
             (e1 - e0) * detail::penalty_slope(e1, e0, ref, s, a1, a2);
  }
  return out;
}

struct MonotonicityDiagnostics {
  double delta1 = 0.0;
  double min_delta2 = 0.0;
};

/// Delta_1 = |<phi_i|U^+(eps_old) - U^+(eps_new)|phi_f>|^2 and min_t Delta_2(t).
inline MonotonicityDiagnostics monotonicity_diagnostics(const ControlField& field_new, const ControlField& field_old,
                                                        const ControlProblem& p, const PenaltySettings& pen,
                                                        int iteration = 0, PropagationOptions opts = {}) {
  detail::check_same_grid(field_new, field_old, "monotonicity_diagnostics");
  const cplx c_old = krotov_coefficient(p, field_old, opts);
  const cplx c_new = krotov_coefficient(p, field_new, opts);
  const auto d2 = delta2_profile(field_new, field_old, pen, iteration);
  MonotonicityDiagnostics d;
  d.delta1 = std::norm(c_old - c_new);
  d.min_delta2 = d2.empty() ? 0.0 : *std::min_element(d2.begin(), d2.end());
  return d;
}

/// Value of \int g(eps; eps_prev) dt for the configured penalty.
inline double penalty_value(const ControlField& eps, const ControlField& eps_prev, const PenaltySettings& pen,
                            int iteration) {
  if (pen.kind == PenaltyKind::Quadratic) return penalty_quadratic(eps, eps_prev, pen.alpha1(iteration));
  return penalty_restricted(eps, eps_prev, pen.reference, pen.alpha1(iteration), pen.alpha2(iteration));
}

struct IterationResult {
  ControlField field;
  IterationRecord record;
  cplx c_new;
  std::vector<double> gradient;  ///< G(t_k) used for each field sample
};

/// One Krotov iteration. c_old, if known, is <phi_f|U(T,0;eps_old)|phi_i>.
inline IterationResult krotov_iterate(const ControlProblem& p, const ControlField& field_old, const PenaltySettings& pen,
                                      int iteration, TrajectoryStore& store, std::optional<cplx> c_old = std::nullopt,
                                      PropagationOptions opts = {}) {
  const ChannelSystem& sys = *p.system;
  if (!(field_old.tgrid == p.tgrid)) throw InvalidInput("krotov_iterate: field is not on the problem's time grid");
  const double a1 = pen.alpha1(iteration), a2 = pen.alpha2(iteration);
  if (pen.kind == PenaltyKind::Quadratic) {
    if (!(a1 > 0.0)) throw InvalidInput("krotov_iterate: alpha must be positive");
  } else {
    check_restricted_alphas(a1, a2);
    if (static_cast<int>(pen.reference.size()) != field_old.size()) {
      throw InvalidInput("krotov_iterate: reference field size mismatch");
    }
  }
  const cplx c = c_old ? *c_old : krotov_coefficient(p, field_old, opts);

  propagate_adjoint(p.target, field_old, sys, p.tgrid, &store, opts);

  IterationResult res;
  res.field = field_old;
  res.gradient.resize(field_old.size());
  ChebychevPropagator prop(sys, opts);
  prop.set_field_cap(1.5 * field_old.max_abs() + 1e-12, p.tgrid.dt);
  StateVector psi = p.initial;
  const double norm0 = sys.norm2(psi);
  for (int k = 0; k < p.tgrid.n_steps; ++k) {
    const StateVector gamma = store.get(k);
    const double grad = (std::conj(c) * dipole_matrix_element(sys.weights, sys.dipole, gamma, psi)).imag();
    const double s = field_old.shape[k];
    const double eps = pen.kind == PenaltyKind::Quadratic
                           ? quadratic_update(field_old.values[k], s, a1, grad)
                           : restricted_update(field_old.values[k], pen.reference[k], s, a1, a2, grad);
    if (!std::isfinite(eps)) {
      throw NumericalFailure("krotov_iterate: non-finite field at t=" + std::to_string(p.tgrid.field_time(k)));
    }
    res.gradient[k] = grad;
    res.field.values[k] = eps;
    prop.step(psi, eps, p.tgrid.dt, Direction::Forward);
  }
  if (std::abs(sys.norm2(psi) - norm0) > opts.max_norm_drift) {
    throw NumericalFailure("krotov_iterate: norm drift in the forward sweep");
  }
  res.c_new = sys.inner(p.target, psi);

  auto& r = res.record;
  r.iteration = iteration + 1;
  r.alpha = a1;
  r.F = std::norm(res.c_new);
  r.penalty = penalty_value(res.field, field_old, pen, iteration);
  r.J = -r.F + r.penalty;
  r.J_previous = -std::norm(c) + penalty_value(field_old, field_old, pen, iteration);
  r.delta1 = std::norm(c - res.c_new);
  const auto d2 = delta2_profile(res.field, field_old, pen, iteration);
  r.min_delta2 = d2.empty() ? 0.0 : *std::min_element(d2.begin(), d2.end());
  return res;
}

struct StopCriteria {
  double target_F = 0.99;
  int max_iterations = 2000;
  int stagnation_window = 50;
  double stagnation_threshold = 1e-10;
};

struct OptimizeOptions {
  PropagationOptions propagation;
  double monotonicity_tolerance = 1e-9;  ///< relative to max(1, |J_0|)
  double diagnostic_tolerance = 1e-12;   ///< floor for Delta_1 and min Delta_2
  int start_iteration = 0;               ///< resumed runs continue the alpha schedule from here
  int checkpoint_every = 0;              ///< 0 disables checkpoints
  std::function<void(const IterationRecord&, const ControlField&)> on_checkpoint;
  std::function<void(const IterationRecord&)> on_iteration;
  std::function<std::unique_ptr<TrajectoryStore>()> make_store;  ///< defaults to memory
};

/// Iterate until the stop criteria fire. Aborts with AlgorithmFault on a
/// monotonicity violation.
inline KrotovRun optimize(const ControlProblem& p, const ControlField& guess, const PenaltySettings& pen,
                          const StopCriteria& stop, const OptimizeOptions& opt = {}) {
  KrotovRun run;
  auto store = opt.make_store ? opt.make_store() : std::make_unique<MemoryTrajectory>();

  cplx c = krotov_coefficient(p, guess, opt.propagation);
  IterationRecord first;
  first.iteration = opt.start_iteration;
  first.F = std::norm(c);
  first.penalty = penalty_value(guess, guess, pen, opt.start_iteration);
  first.J = -first.F + first.penalty;
  first.J_previous = first.J;
  first.alpha = pen.alpha1(opt.start_iteration);
  run.records.push_back(first);
  run.field = guess;
  run.best_field = guess;
  run.best_F = first.F;
  if (opt.on_iteration) opt.on_iteration(first);
  const double j_scale = std::max(1.0, std::abs(first.J));

  auto stopped = [&](int done) -> bool {
    const auto& last = run.records.back();
    if (last.F >= stop.target_F) {
      run.stop_reason = "target objective reached";
      return true;
    }
    if (done >= stop.max_iterations) {
      run.stop_reason = "iteration limit";
      return true;
    }
    const int n = static_cast<int>(run.records.size());
    if (stop.stagnation_window > 0 && n > stop.stagnation_window) {
      if (std::abs(last.F - run.records[n - 1 - stop.stagnation_window].F) < stop.stagnation_threshold) {
        run.stop_reason = "stagnation";
        return true;
      }
    }
    return false;
  };

  int done = 0;
  while (!stopped(done)) {
    const int it = opt.start_iteration + done;
    auto res = krotov_iterate(p, run.field, pen, it, *store, c, opt.propagation);
    const auto& r = res.record;
    if (r.J > r.J_previous + opt.monotonicity_tolerance * j_scale) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "monotonicity violated at iteration " << r.iteration << ": J=" << r.J << " > J_prev=" << r.J_previous
          << " (delta1=" << r.delta1 << ", min delta2=" << r.min_delta2 << ")";
      throw AlgorithmFault(msg.str());
    }
    if (r.delta1 < -opt.diagnostic_tolerance || r.min_delta2 < -opt.diagnostic_tolerance) {
      throw AlgorithmFault("monotonicity conditions violated at iteration " + std::to_string(r.iteration));
    }
    run.records.push_back(r);
    run.field = std::move(res.field);
    c = res.c_new;
    ++done;
    if (r.F > run.best_F) {
      run.best_F = r.F;
      run.best_field = run.field;
    }
    if (opt.on_iteration) opt.on_iteration(r);
    if (opt.checkpoint_every > 0 && opt.on_checkpoint && done % opt.checkpoint_every == 0) {
      opt.on_checkpoint(r, run.field);
    }
  }
  return run;
}

}  // namespace vibctl
