#pragma once

// Post-run diagnostics: spectra, pulse energy, level populations, threshold counts.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "errors.hpp"
#include "field.hpp"
#include "hamiltonian.hpp"
#include "state.hpp"
#include "units.hpp"

namespace vibctl {

enum class SpectrumWindow { Rectangular, RaisedCosine };

/// |dt * DFT| on bins 0..N/2.
struct Spectrum {
  std::vector<double> omega;      ///< angular frequency (hartree)
  std::vector<double> magnitude;  ///< atomic units (field * time)
  int n_samples = 0;
  double dt = 0.0;

  std::size_t size() const { return omega.size(); }
  double frequency_cm1(std::size_t l) const { return omega[l] * units::hartree_to_cm1; }
  std::size_t peak_bin() const {
    return static_cast<std::size_t>(std::max_element(magnitude.begin(), magnitude.end()) - magnitude.begin());
  }
  double bin_width() const { return 2.0 * units::pi / (n_samples * dt); }
};

inline Spectrum pulse_spectrum(const ControlField& field, SpectrumWindow window = SpectrumWindow::Rectangular) {
  const int n = field.size();
  if (n == 0) throw InvalidInput("pulse_spectrum: empty field");
  std::vector<double> x = field.values;
  if (window == SpectrumWindow::RaisedCosine) {
    for (int j = 0; j < n; ++j) x[j] *= 0.5 * (1.0 - std::cos(2.0 * units::pi * (j + 0.5) / n));
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> f;
  fft.fwd(f, x);
  Spectrum s;
  s.n_samples = n;
  s.dt = field.tgrid.dt;
  for (int l = 0; l <= n / 2; ++l) {
    s.omega.push_back(2.0 * units::pi * l / (n * s.dt));
    s.magnitude.push_back(s.dt * std::abs(f[l]));
  }
  return s;
}

/// \int eps^2 dt recovered from a rectangular-window spectrum (Parseval).
inline double spectral_fluence(const Spectrum& s) {
  const int n = s.n_samples;
  double sum = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) {
    const bool unpaired = l == 0 || (n % 2 == 0 && static_cast<int>(l) == n / 2);
    sum += (unpaired ? 1.0 : 2.0) * s.magnitude[l] * s.magnitude[l];
  }
  return sum / (n * s.dt);
}

/// E_P = eps_0 c pi r^2 \int E(t)^2 dt in joule, from an atomic-unit fluence.
inline double energy_from_fluence(double fluence_au, double beam_radius_m) {
  if (!(beam_radius_m > 0.0)) throw InvalidInput("pulse_energy: beam radius must be positive");
  const double area = units::pi * beam_radius_m * beam_radius_m;
  const double si = fluence_au * units::au_field_v_per_m * units::au_field_v_per_m * units::au_time_s;
  return units::vacuum_permittivity * units::speed_of_light * area * si;
}

inline double pulse_energy(const ControlField& field, double beam_radius_m) {
  return energy_from_fluence(field.fluence(), beam_radius_m);
}

/// Populations |<phi_v|psi_c(t)>|^2 for every computed level of both channels.
struct PopulationTrace {
  std::vector<double> times;
  Eigen::MatrixXd ground;   ///< rows: times, cols: levels v
  Eigen::MatrixXd excited;  ///< rows: times, cols: levels v'
  Eigen::VectorXd total_ground, total_excited;
  Eigen::VectorXd bound_ground, bound_excited;
  int n_bound_ground = 0, n_bound_excited = 0;

  Eigen::VectorXd continuum_ground() const { return total_ground - bound_ground; }
  Eigen::VectorXd continuum_excited() const { return total_excited - bound_excited; }
};

inline PopulationTrace population_trace(const std::vector<StateVector>& states, const std::vector<double>& times,
                                        const EigenBasis& ground, const EigenBasis& excited) {
  if (states.size() != times.size()) throw InvalidInput("population_trace: states and times differ in length");
  const auto& w = ground.weights;
  if (excited.weights.size() != w.size() || (excited.weights - w).cwiseAbs().maxCoeff() > 1e-14 * w.maxCoeff()) {
    throw InvalidInput("population_trace: bases live on different grids");
  }
  PopulationTrace tr;
  tr.times = times;
  const auto nt = static_cast<Eigen::Index>(states.size());
  tr.ground.resize(nt, ground.size());
  tr.excited.resize(nt, excited.size());
  tr.total_ground.resize(nt);
  tr.total_excited.resize(nt);
  tr.bound_ground.resize(nt);
  tr.bound_excited.resize(nt);
  tr.n_bound_ground = ground.n_bound;
  tr.n_bound_excited = excited.n_bound;
  const Eigen::MatrixXd pg = ground.states.transpose() * w.asDiagonal();
  const Eigen::MatrixXd pe = excited.states.transpose() * w.asDiagonal();
  for (Eigen::Index i = 0; i < nt; ++i) {
    const auto& s = states[static_cast<std::size_t>(i)];
    if (s.g.size() != w.size()) throw InvalidInput("population_trace: state does not match the basis grid");
    tr.ground.row(i) = (pg * s.g).cwiseAbs2().transpose();
    tr.excited.row(i) = (pe * s.e).cwiseAbs2().transpose();
    tr.total_ground(i) = channel_norm2(w, s.g);
    tr.total_excited(i) = channel_norm2(w, s.e);
    tr.bound_ground(i) = tr.ground.row(i).head(ground.n_bound).sum();
    tr.bound_excited(i) = tr.excited.row(i).head(excited.n_bound).sum();
  }
  return tr;
}

struct CensusRow {
  double threshold = 0.0;
  int ground_count = 0;
  int excited_count = 0;
  std::vector<double> ground_longest;   ///< longest contiguous time above threshold, per level
  std::vector<double> excited_longest;
};

namespace detail {
inline void census_channel(const Eigen::MatrixXd& pop, const std::vector<double>& times, double theta, int& count,
                           std::vector<double>& longest) {
  const double step = times.size() > 1 ? times[1] - times[0] : 0.0;
  longest.assign(static_cast<std::size_t>(pop.cols()), 0.0);
  count = 0;
  for (Eigen::Index v = 0; v < pop.cols(); ++v) {
    int run = 0, best = 0;
    for (Eigen::Index i = 0; i < pop.rows(); ++i) {
      run = pop(i, v) > theta ? run + 1 : 0;
      best = std::max(best, run);
    }
    if (best > 0) ++count;
    longest[static_cast<std::size_t>(v)] = best * step;
  }
}
}  // namespace detail

/// Levels whose population exceeds each threshold at any stored time.
inline std::vector<CensusRow> threshold_census(const PopulationTrace& tr, const std::vector<double>& thresholds) {
  std::vector<CensusRow> rows;
  for (double theta : thresholds) {
    if (!(theta > 0.0 && theta < 1.0)) throw InvalidInput("threshold_census: thresholds must lie in (0, 1)");
    CensusRow r;
    r.threshold = theta;
    detail::census_channel(tr.ground, tr.times, theta, r.ground_count, r.ground_longest);
    detail::census_channel(tr.excited, tr.times, theta, r.excited_count, r.excited_longest);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- table writers -------------------------------------------------------

namespace detail {
inline std::ofstream open_table(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path);
  out << std::setprecision(12);
  return out;
}
inline void close_table(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoFailure("write failed: " + path);
}
}  // namespace detail

inline void write_spectrum(const std::string& path, const Spectrum& s) {
  auto out = detail::open_table(path);
  out << "# frequency_cm1 magnitude_au\n";
  for (std::size_t l = 0; l < s.size(); ++l) out << s.frequency_cm1(l) << ' ' << s.magnitude[l] << '\n';
  detail::close_table(out, path);
}

inline void write_eigenvalues(const std::string& path, const EigenBasis& b) {
  auto out = detail::open_table(path);
  out << "# " << channel_name(b.channel) << " channel, " << b.n_bound << " bound\n# v energy_hartree energy_cm1\n";
  for (int v = 0; v < b.size(); ++v) {
    out << v << ' ' << b.energies(v) << ' ' << b.energies(v) * units::hartree_to_cm1 << '\n';
  }
  detail::close_table(out, path);
}

/// One row per time: t_fs, total, bound, continuum, then every level.
inline void write_populations(const std::string& path, const PopulationTrace& tr, Channel c) {
  const bool g = c == Channel::Ground;
  const auto& pop = g ? tr.ground : tr.excited;
  const auto& total = g ? tr.total_ground : tr.total_excited;
  const auto& bound = g ? tr.bound_ground : tr.bound_excited;
  auto out = detail::open_table(path);
  out << "# " << channel_name(c) << " channel populations\n# t_fs total bound continuum";
  for (Eigen::Index v = 0; v < pop.cols(); ++v) out << " v" << v;
  out << '\n';
  for (Eigen::Index i = 0; i < pop.rows(); ++i) {
    out << tr.times[static_cast<std::size_t>(i)] * units::au_time_fs << ' ' << total(i) << ' ' << bound(i) << ' '
        << total(i) - bound(i);
    for (Eigen::Index v = 0; v < pop.cols(); ++v) out << ' ' << pop(i, v);
    out << '\n';
  }
  detail::close_table(out, path);
}

inline void write_census(const std::string& path, const std::vector<CensusRow>& rows) {
  auto out = detail::open_table(path);
  out << "# threshold ground_levels excited_levels longest_ground_fs longest_excited_fs\n";
  for (const auto& r : rows) {
    const double lg = r.ground_longest.empty() ? 0.0 : *std::max_element(r.ground_longest.begin(), r.ground_longest.end());
    const double le =
        r.excited_longest.empty() ? 0.0 : *std::max_element(r.excited_longest.begin(), r.excited_longest.end());
    out << r.threshold << ' ' << r.ground_count << ' ' << r.excited_count << ' ' << lg * units::au_time_fs << ' '
        << le * units::au_time_fs << '\n';
  }
  detail::close_table(out, path);
}

}  // namespace vibctl
