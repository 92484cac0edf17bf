#pragma once

// Guess construction, intensity reduction and time compression.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "errors.hpp"
#include "field.hpp"
#include "hamiltonian.hpp"
#include "units.hpp"

namespace vibctl {

enum class EnvelopeKind { Gaussian, GaussianTrain, Sin2, Flat };

/// eps(t) = amplitude * envelope(t) * sum_i cos(omega_i t)
struct GuessSpec {
  double amplitude = 0.0;        ///< atomic units
  std::vector<double> centers;   ///< carrier frequencies (hartree)
  EnvelopeKind envelope = EnvelopeKind::Gaussian;
  double fwhm = 0.0;             ///< per sub-pulse (atomic time); Gaussian kinds
  std::vector<double> offsets;   ///< train sub-pulse centers; empty means one at T/2

  static std::vector<double> from_cm1(const std::vector<double>& cm1) {
    std::vector<double> out;
    for (double w : cm1) out.push_back(w * units::cm1_to_hartree);
    return out;
  }
};

inline ShapeFunction envelope_shape(const GuessSpec& spec) {
  switch (spec.envelope) {
    case EnvelopeKind::Gaussian:
      return spec.offsets.empty() ? ShapeFunction{ShapeFunction::Kind::Gaussian, spec.fwhm, {}}
                                  : ShapeFunction::gaussian(spec.fwhm, spec.offsets.front());
    case EnvelopeKind::GaussianTrain:
      return ShapeFunction::gaussian_train(spec.fwhm, spec.offsets);
    case EnvelopeKind::Sin2:
      return ShapeFunction::sin2();
    case EnvelopeKind::Flat:
      return ShapeFunction::flat();
  }
  return ShapeFunction::flat();
}

inline ControlField make_guess(const GuessSpec& spec, const TimeGrid& tg,
                               const ShapeFunction& update_shape = ShapeFunction::sin2()) {
  if (!(spec.amplitude >= 0.0)) throw InvalidInput("guess: amplitude must be >= 0");
  for (double w : spec.centers) {
    if (!(w > 0.0)) throw InvalidInput("guess: carrier frequencies must be positive");
    if (!(w * tg.dt < units::pi)) {
      throw InvalidInput("guess: carrier " + std::to_string(w * units::hartree_to_cm1) +
                         " cm^-1 is not resolved by dt (omega*dt >= pi)");
    }
  }
  if (spec.envelope == EnvelopeKind::Gaussian || spec.envelope == EnvelopeKind::GaussianTrain) {
    if (!(spec.fwhm > 0.0 && spec.fwhm < tg.duration())) {
      throw InvalidInput("guess: envelope fwhm must lie in (0, T)");
    }
  }
  const ShapeFunction env = envelope_shape(spec);
  ControlField f = ControlField::zero(tg, update_shape);
  if (spec.amplitude == 0.0) return f;
  for (int k = 0; k < tg.n_steps; ++k) {
    const double t = tg.field_time(k);
    double carrier = 0.0;
    for (double w : spec.centers) carrier += std::cos(w * t);
    f.values[k] = spec.amplitude * env(t, tg.duration()) * carrier;
  }
  return f;
}

/// Pointwise division; the pulse energy drops by factor^2.
inline ControlField reduce_intensity_restart(const ControlField& optimal, double factor) {
  if (!(factor >= 1.0)) throw InvalidInput("reduce_intensity_restart: factor must be >= 1");
  ControlField f = optimal;
  for (double& v : f.values) v /= factor;
  return f;
}

/// Rescale so that \int eps^2 dt equals `fluence`.
inline ControlField scale_to_fluence(const ControlField& field, double fluence) {
  if (!(fluence >= 0.0)) throw InvalidInput("scale_to_fluence: target must be >= 0");
  const double now = field.fluence();
  if (now == 0.0) {
    if (fluence == 0.0) return field;
    throw InvalidInput("scale_to_fluence: cannot rescale a zero field");
  }
  ControlField f = field;
  const double s = std::sqrt(fluence / now);
  for (double& v : f.values) v *= s;
  return f;
}

enum class Decimation { Asymmetric, Symmetric };

struct CompressionOptions {
  Decimation mode = Decimation::Asymmetric;
  double energy_fraction = 1.0;  ///< output fluence relative to the input
};

struct CompressedField {
  ControlField field;
  int padded_length = 0;
  std::vector<double> kept_frequencies;  ///< angular, atomic units, signed bins >= 0
};

/// Keep every k-th spectral sample and resynthesize on M = N'/k points with
/// the original dt, where N' is N zero-padded to a multiple of k.
///
/// Asymmetric keeps bins l = 0, k, 2k, ... (the inverse transform of the
/// decimated spectrum; equivalently the time-aliased sum over k segments).
/// Symmetric keeps the signed bins l = +-k/2, +-3k/2, ... mirrored about zero
/// frequency; for odd k it coincides with the asymmetric choice. Surviving bins
/// keep their exact frequencies. The result carries the shape sin(pi t / T~).
inline CompressedField compress_time(const ControlField& field, int k, const CompressionOptions& opts = {}) {
  const int n = field.size();
  if (k < 1) throw InvalidInput("compress_time: keep_every must be >= 1");
  if (k > n / 4) throw InvalidInput("compress_time: keep_every exceeds N_t/4, too few samples would survive");
  if (!(opts.energy_fraction > 0.0)) throw InvalidInput("compress_time: energy fraction must be positive");
  const int padded = ((n + k - 1) / k) * k;
  const int m = padded / k;

  std::vector<double> x(padded, 0.0);
  std::copy(field.values.begin(), field.values.end(), x.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);

  const bool symmetric = opts.mode == Decimation::Symmetric && k % 2 == 0;
  const int offset = symmetric ? k / 2 : 0;
  std::vector<int> kept;  // signed bins in (-padded/2, padded/2]
  for (int l = -padded / 2 + 1; l <= padded / 2; ++l) {
    if (((l - offset) % k + k) % k == 0) kept.push_back(l);
  }

  const TimeGrid tg(m, field.tgrid.dt);
  CompressedField out;
  out.padded_length = padded;
  std::vector<double> values(m, 0.0);
  for (int j = 0; j < m; ++j) {
    std::complex<double> sum = 0.0;
    for (int l : kept) {
      const auto& fl = spec[static_cast<std::size_t>((l + padded) % padded)];
      // Nyquist bin appears once; its conjugate partner is itself.
      sum += fl * std::polar(1.0, 2.0 * units::pi * static_cast<double>(l) * j / padded);
    }
    values[j] = sum.real() / padded;
  }
  for (int l : kept) {
    if (l >= 0) out.kept_frequencies.push_back(2.0 * units::pi * l / (padded * field.tgrid.dt));
  }
  out.field = ControlField(tg, std::move(values), ShapeFunction::sine().sample(tg));
  if (k > 1 || opts.energy_fraction != 1.0) {
    const double budget = opts.energy_fraction * field.fluence();
    if (out.field.fluence() > 0.0) out.field = scale_to_fluence(out.field, budget);
  }
  return out;
}

/// Angular frequencies of the DFT bins 0..M/2 of a field with M samples.
inline std::vector<double> bin_frequencies(int m, double dt) {
  std::vector<double> w(m / 2 + 1);
  for (int l = 0; l <= m / 2; ++l) w[l] = 2.0 * units::pi * l / (m * dt);
  return w;
}

struct TimeHint {
  double t_star = 0.0;       ///< 2 pi / |E_v - E_{v-1}|
  double recommended = 0.0;  ///< 2 T*
};

inline TimeHint minimal_time_hint(const EigenBasis& basis, int v) {
  if (v == 0) throw InvalidInput("minimal_time_hint: level 0 has no lower neighbour");
  if (v < 0 || v >= basis.size() || v >= std::max(basis.n_bound, 1)) {
    throw InvalidInput("minimal_time_hint: level " + std::to_string(v) + " is not a computed bound level");
  }
  const double gap = std::abs(basis.energies(v) - basis.energies(v - 1));
  if (!(gap > 0.0)) throw NumericalFailure("minimal_time_hint: degenerate levels");
  TimeHint h;
  h.t_star = 2.0 * units::pi / gap;
  h.recommended = 2.0 * h.t_star;
  return h;
}

}  // namespace vibctl
