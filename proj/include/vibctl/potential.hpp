#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace vibctl {

/// Long-range extrapolation V(R) = V_inf - C / R^power beyond the last table
/// sample, with C chosen so the tail matches the last sample in value.
struct LongRangeTail {
  int power = 6;
  double asymptote = 0.0;
};

/// A potential-energy curve in atomic units (bohr -> hartree).
///
/// Either tabulated (linear interpolation, optional long-range tail) or an
/// analytic model. Immutable after construction.
class PotentialCurve {
 public:
  using Sample = std::pair<double, double>;

  static PotentialCurve morse(double depth, double range, double r_eq, double offset = 0.0,
                              std::string label = "morse") {
    if (!(depth > 0.0) || !(range > 0.0)) throw InvalidInput("morse: depth and range must be positive");
    PotentialCurve c;
    c.label_ = std::move(label);
    c.asymptote_ = offset + depth;
    c.eval_ = [=](double r) {
      const double e = 1.0 - std::exp(-range * (r - r_eq));
      return offset + depth * e * e;
    };
    return c;
  }

  /// V = offset + k/2 (r - r_eq)^2. No asymptote.
  static PotentialCurve harmonic(double force_constant, double r_eq, double offset = 0.0,
                                 std::string label = "harmonic") {
    if (!(force_constant > 0.0)) throw InvalidInput("harmonic: force constant must be positive");
    PotentialCurve c;
    c.label_ = std::move(label);
    c.eval_ = [=](double r) { return offset + 0.5 * force_constant * (r - r_eq) * (r - r_eq); };
    return c;
  }

  static PotentialCurve constant(double value, std::string label = "flat") {
    PotentialCurve c;
    c.label_ = std::move(label);
    c.asymptote_ = value;
    c.eval_ = [=](double) { return value; };
    return c;
  }

  /// Arbitrary analytic curve.
  static PotentialCurve analytic(std::function<double(double)> f, std::optional<double> asymptote,
                                 std::string label) {
    PotentialCurve c;
    c.label_ = std::move(label);
    c.asymptote_ = asymptote;
    c.eval_ = std::move(f);
    return c;
  }

  static PotentialCurve from_table(std::vector<Sample> samples, std::string label,
                                   std::optional<LongRangeTail> tail = std::nullopt) {
    if (samples.size() < 8) throw InvalidInput(label + ": potential table needs at least 8 samples");
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].first > samples[i - 1].first)) {
        throw InvalidInput(label + ": potential table R values must be strictly increasing (sample " +
                           std::to_string(i) + ")");
      }
    }
    for (const auto& [r, v] : samples) {
      if (!std::isfinite(r) || !std::isfinite(v)) throw InvalidInput(label + ": non-finite table entry");
    }
    PotentialCurve c;
    c.label_ = std::move(label);
    c.r_lo_ = samples.front().first;
    c.r_hi_ = tail ? std::numeric_limits<double>::infinity() : samples.back().first;
    if (tail) {
      if (tail->power <= 0) throw InvalidInput(c.label_ + ": tail power must be positive");
      const auto [r_last, v_last] = samples.back();
      double v_min = v_last;
      for (const auto& s : samples) v_min = std::min(v_min, s.second);
      const double depth = tail->asymptote - v_min;
      if (!(depth > 0.0) || std::abs(v_last - tail->asymptote) > 0.1 * depth) {
        throw InvalidInput(c.label_ + ": last sample is not within 10% of the declared asymptote");
      }
      c.asymptote_ = tail->asymptote;
    }
    c.table_ = std::move(samples);
    const auto table = c.table_;
    const auto tail_copy = tail;
    const std::string name = c.label_;
    c.eval_ = [table, tail_copy, name](double r) {
      if (r < table.front().first) {
        throw InvalidInput(name + ": R=" + std::to_string(r) + " below the potential table");
      }
      if (r > table.back().first) {
        if (!tail_copy) {
          throw InvalidInput(name + ": R=" + std::to_string(r) +
                             " beyond the potential table and no extrapolation tail configured");
        }
        const auto [r_last, v_last] = table.back();
        const double coeff = (tail_copy->asymptote - v_last) * std::pow(r_last, tail_copy->power);
        return tail_copy->asymptote - coeff / std::pow(r, tail_copy->power);
      }
      auto hi = std::upper_bound(table.begin(), table.end(), r,
                                 [](double x, const Sample& s) { return x < s.first; });
      if (hi == table.end()) return table.back().second;
      auto lo = hi - 1;
      const double w = (r - lo->first) / (hi->first - lo->first);
      return lo->second + w * (hi->second - lo->second);
    };
    return c;
  }

  double operator()(double r) const { return eval_(r); }

  const std::string& label() const { return label_; }
  std::optional<double> asymptote() const { return asymptote_; }
  bool tabulated() const { return !table_.empty(); }
  const std::vector<Sample>& table() const { return table_; }

  /// Interval on which the curve can be evaluated.
  std::pair<double, double> domain() const { return {r_lo_, r_hi_}; }
  bool covers(double r_min, double r_max) const { return r_min >= r_lo_ && r_max <= r_hi_; }

 private:
  PotentialCurve() = default;

  std::string label_;
  std::optional<double> asymptote_;
  std::vector<Sample> table_;
  double r_lo_ = -std::numeric_limits<double>::infinity();
  double r_hi_ = std::numeric_limits<double>::infinity();
  std::function<double(double)> eval_;
};

/// Reads "R V" rows; '#' starts a comment line. The scales convert the file's
/// columns to bohr and hartree; the tail is given in atomic units.
inline PotentialCurve load_potential_file(const std::string& path, std::string label,
                                          std::optional<LongRangeTail> tail = std::nullopt,
                                          double energy_scale = 1.0, double length_scale = 1.0) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open potential file: " + path);
  std::vector<PotentialCurve::Sample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    double r = 0.0, v = 0.0;
    if (!(row >> r >> v)) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected two numbers \"R V\"");
    }
    samples.emplace_back(r * length_scale, v * energy_scale);
  }
  try {
    return PotentialCurve::from_table(std::move(samples), std::move(label), tail);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

/// Pointwise minimum of two curves. Used as the mapping envelope.
inline PotentialCurve envelope_of(const PotentialCurve& a, const PotentialCurve& b) {
  std::optional<double> asym;
  if (a.asymptote() && b.asymptote()) asym = std::min(*a.asymptote(), *b.asymptote());
  return PotentialCurve::analytic([a, b](double r) { return std::min(a(r), b(r)); }, asym,
                                  "envelope(" + a.label() + "," + b.label() + ")");
}

}  // namespace vibctl
