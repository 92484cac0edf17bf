#pragma once

// Time discretization, shape functions and the control field.
//
// States live on n_steps + 1 points t_k = k dt; field samples live on the
// n_steps staggered midpoints (t_k + t_{k+1}) / 2.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "units.hpp"

namespace vibctl {

struct TimeGrid {
  int n_steps = 0;
  double dt = 0.0;

  TimeGrid() = default;
  TimeGrid(int steps, double step) : n_steps(steps), dt(step) {
    if (steps < 1) throw InvalidInput("time grid: n_steps must be positive");
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInput("time grid: dt must be positive");
  }
  static TimeGrid from_duration(double total, int steps) {
    if (steps < 1) throw InvalidInput("time grid: n_steps must be positive");
    return TimeGrid(steps, total / steps);
  }

  double duration() const { return n_steps * dt; }
  double state_time(int k) const { return k * dt; }
  double field_time(int k) const { return 0.5 * (state_time(k) + state_time(k + 1)); }

  std::vector<double> state_times() const {
    std::vector<double> t(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) t[k] = state_time(k);
    return t;
  }
  std::vector<double> field_times() const {
    std::vector<double> t(n_steps);
    for (int k = 0; k < n_steps; ++k) t[k] = field_time(k);
    return t;
  }

  bool operator==(const TimeGrid&) const = default;
};

/// Envelope S(t) in [0, 1] gating where the optimizer may change the field.
struct ShapeFunction {
  enum class Kind { Flat, Sin2, Sine, Gaussian, GaussianTrain };
  Kind kind = Kind::Sin2;
  double fwhm = 0.0;             ///< Gaussian kinds
  std::vector<double> centers;   ///< Gaussian kinds; empty means the window center

  static ShapeFunction flat() { return {Kind::Flat, 0.0, {}}; }
  static ShapeFunction sin2() { return {Kind::Sin2, 0.0, {}}; }
  /// sin(pi t / T): the shape used after time compression.
  static ShapeFunction sine() { return {Kind::Sine, 0.0, {}}; }
  static ShapeFunction gaussian(double fwhm, double center) { return {Kind::Gaussian, fwhm, {center}}; }
  static ShapeFunction gaussian_train(double fwhm, std::vector<double> centers) {
    return {Kind::GaussianTrain, fwhm, std::move(centers)};
  }

  double operator()(double t, double duration) const {
    switch (kind) {
      case Kind::Flat:
        return 1.0;
      case Kind::Sin2: {
        const double s = std::sin(units::pi * t / duration);
        return s * s;
      }
      case Kind::Sine:
        return std::max(0.0, std::sin(units::pi * t / duration));
      case Kind::Gaussian:
      case Kind::GaussianTrain: {
        if (!(fwhm > 0.0)) throw InvalidInput("gaussian shape: fwhm must be positive");
        const double c = 4.0 * std::log(2.0) / (fwhm * fwhm);
        double sum = 0.0;
        if (centers.empty()) {
          sum = std::exp(-c * (t - 0.5 * duration) * (t - 0.5 * duration));
        } else {
          for (double t0 : centers) sum += std::exp(-c * (t - t0) * (t - t0));
        }
        return std::min(1.0, sum);
      }
    }
    return 0.0;
  }

  std::vector<double> sample(const TimeGrid& tg) const {
    std::vector<double> s(tg.n_steps);
    for (int k = 0; k < tg.n_steps; ++k) s[k] = (*this)(tg.field_time(k), tg.duration());
    return s;
  }
};

/// Real field samples on the staggered grid plus the update shape S.
struct ControlField {
  TimeGrid tgrid;
  std::vector<double> values;  ///< atomic units of field strength
  std::vector<double> shape;

  ControlField() = default;
  ControlField(TimeGrid tg, std::vector<double> v, std::vector<double> s)
      : tgrid(tg), values(std::move(v)), shape(std::move(s)) {
    validate();
  }
  static ControlField zero(const TimeGrid& tg, const ShapeFunction& s) {
    return ControlField(tg, std::vector<double>(tg.n_steps, 0.0), s.sample(tg));
  }

  int size() const { return static_cast<int>(values.size()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  /// Rectangle-rule fluence integral of eps^2 dt (atomic units).
  double fluence() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s * tgrid.dt;
  }

  void validate() const {
    if (static_cast<int>(values.size()) != tgrid.n_steps || static_cast<int>(shape.size()) != tgrid.n_steps) {
      throw InvalidInput("control field: sample count does not match the time grid");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw NumericalFailure("control field: non-finite field value");
    }
    for (double s : shape) {
      if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("control field: shape must lie in [0, 1]");
    }
  }
};

/// Header of a field file: '# key value' lines.
using FieldHeader = std::map<std::string, std::string>;

namespace detail {
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// Writes "t eps" rows, atomically (temp file + rename).
inline void write_field(const std::string& path, const ControlField& f, const FieldHeader& header = {}) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoFailure("cannot write field file " + tmp);
    for (const auto& [k, v] : header) out << "# " << k << ' ' << v << '\n';
    out << "# n_steps " << f.tgrid.n_steps << '\n';
    out << "# dt " << detail::fmt17(f.tgrid.dt) << '\n';
    out << "# columns t_au eps_au shape\n";
    for (int k = 0; k < f.size(); ++k) {
      out << detail::fmt17(f.tgrid.field_time(k)) << ' ' << detail::fmt17(f.values[k]) << ' '
          << detail::fmt17(f.shape[k]) << '\n';
    }
    out.flush();
    if (!out) throw IoFailure("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot move " + tmp + " to " + path + ": " + ec.message());
}

struct FieldFile {
  ControlField field;
  FieldHeader header;
};

inline FieldFile read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open field file " + path);
  FieldFile ff;
  std::vector<double> values, shape;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream h(line.substr(1));
      std::string key, rest;
      h >> key;
      std::getline(h >> std::ws, rest);
      if (!key.empty()) ff.header[key] = rest;
      continue;
    }
    std::istringstream row(line);
    double t = 0.0, v = 0.0, s = 1.0;
    if (!(row >> t >> v)) throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected \"t eps [shape]\"");
    if (!(row >> s)) s = 1.0;
    values.push_back(v);
    shape.push_back(s);
  }
  if (!ff.header.count("n_steps") || !ff.header.count("dt")) {
    throw InvalidInput(path + ": missing n_steps/dt header");
  }
  const TimeGrid tg(std::stoi(ff.header["n_steps"]), std::strtod(ff.header["dt"].c_str(), nullptr));
  ff.field = ControlField(tg, std::move(values), std::move(shape));
  return ff;
}

}  // namespace vibctl
