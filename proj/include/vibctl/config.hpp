#pragma once

// YAML run configuration. Physical inputs carry their unit in the key name
// (mass_amu, T_ps, centers_cm1, ...) and are converted to atomic units here.
// Errors name the file and line.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "analysis.hpp"
#include "errors.hpp"
#include "krotov.hpp"
#include "potential.hpp"
#include "strategies.hpp"
#include "units.hpp"

namespace vibctl {

struct CurveConfig {
  enum class Source { Morse, File } source = Source::Morse;
  double depth = 0.0, range = 0.0, r_eq = 0.0, offset = 0.0;  // Morse, atomic units
  std::string path;                                           // File, resolved against the config directory
  double energy_scale = 1.0, length_scale = 1.0;              // file units -> atomic
  std::optional<LongRangeTail> tail;
};

struct StageConfig {
  enum class Kind { Optimize, ReduceIntensity, CompressTime } kind = Kind::Optimize;
  double factor = 1.0;  // ReduceIntensity
  int keep_every = 1;   // CompressTime
  std::optional<double> target_F;     // Optimize: overrides stop.target_F
  std::optional<int> max_iterations;  // Optimize: overrides stop.max_iterations

  std::string describe() const {
    std::ostringstream s;
    switch (kind) {
      case Kind::Optimize:
        s << "optimize";
        if (target_F) s << " target_F=" << *target_F;
        if (max_iterations) s << " max_iterations=" << *max_iterations;
        break;
      case Kind::ReduceIntensity:
        s << "reduce_intensity " << factor;
        break;
      case Kind::CompressTime:
        s << "compress_time " << keep_every;
        break;
    }
    return s.str();
  }
};

struct RunConfig {
  std::string source;  ///< config path as given

  double mass = 0.0;    ///< electron masses
  double dipole = 1.0;  ///< atomic units
  CurveConfig ground, excited;
  std::optional<double> two_level_gap;  ///< set: a bare two-level system replaces the curves and grid

  int n_points = 256;
  double r_min = 0.0, r_max = 0.0;
  std::optional<double> e_max;
  double beta = 1.3;

  int n_levels = 30;
  int initial_level = 0, target_level = 0;
  Channel target_channel = Channel::Ground;

  std::optional<double> duration;  ///< empty: 2 T*
  std::optional<int> n_steps;
  std::optional<double> dt;

  double amplitude = 0.0;
  std::vector<double> centers;                      ///< hartree
  std::vector<std::pair<int, int>> fc_transitions;  ///< (v, v') pairs, carrier E'_v' - E_v
  EnvelopeKind envelope = EnvelopeKind::Sin2;
  double fwhm = 0.0;
  std::vector<double> offsets;
  ShapeFunction update_shape = ShapeFunction::sin2();

  PenaltyKind penalty = PenaltyKind::Quadratic;
  AlphaSchedule alpha;
  double alpha2_fraction = 0.0;

  StopCriteria stop;
  std::vector<StageConfig> pipeline{StageConfig{}};
  CompressionOptions compression;
  double propagation_tolerance = 1e-12;

  std::string output_dir = "vibctl-out";
  int checkpoint_every = 10;
  double memory_budget_mb = 1024.0;
  double beam_radius = 300e-6;  ///< metre
  std::vector<double> census_thresholds{0.05, 0.10};
  SpectrumWindow spectrum_window = SpectrumWindow::Rectangular;
  int population_stride = 1;
  std::uint64_t seed = 0;
};

namespace config_detail {

class Reader {
 public:
  explicit Reader(std::string file) : file_(std::move(file)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const auto m = n.Mark();
    std::string where = file_;
    if (m.line >= 0) where += ":" + std::to_string(m.line + 1);
    throw InvalidInput(where + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw InvalidInput(file_ + ": " + msg); }

  /// Rejects keys not in `allowed` so typos do not pass silently.
  void check_keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& allowed) const {
    if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
    }
  }

  template <class T>
  T get(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "cannot read '" + what + "'");
    }
  }

  double positive(const YAML::Node& n, const std::string& what) const {
    const auto v = get<double>(n, what);
    if (!(v > 0.0)) fail(n, "'" + what + "' must be positive");
    return v;
  }

  /// One of base_<suffix>; returns the value converted with the suffix scale.
  std::optional<double> quantity(const YAML::Node& map, const std::string& base,
                                 const std::vector<std::pair<std::string, double>>& suffixes) const {
    std::optional<double> out;
    std::string seen;
    for (const auto& [suffix, scale] : suffixes) {
      const std::string key = base + "_" + suffix;
      if (const auto n = map[key]) {
        if (out) fail(n, "both '" + seen + "' and '" + key + "' given");
        out = get<double>(n, key) * scale;
        seen = key;
      }
    }
    return out;
  }

  std::vector<double> list(const YAML::Node& n, const std::string& what) const {
    if (n.IsScalar()) return {get<double>(n, what)};
    if (!n.IsSequence()) fail(n, "'" + what + "' must be a number or a list");
    std::vector<double> v;
    for (const auto& x : n) v.push_back(get<double>(x, what));
    return v;
  }

  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

inline const std::vector<std::pair<std::string, double>> kEnergy{{"hartree", 1.0}, {"cm1", units::cm1_to_hartree}};
inline const std::vector<std::pair<std::string, double>> kLength{{"bohr", 1.0}, {"angstrom", 1e-10 / units::bohr_m}};
inline const std::vector<std::pair<std::string, double>> kTime{
    {"au", 1.0}, {"fs", units::fs_to_au}, {"ps", units::ps_to_au}};

inline CurveConfig parse_curve(const Reader& rd, const YAML::Node& n, const std::string& name,
                               const std::filesystem::path& base_dir) {
  rd.check_keys(n, name, {"morse", "file", "energy_unit", "length_unit", "tail"});
  CurveConfig c;
  if (n["morse"] && n["file"]) rd.fail(n, name + ": give either 'morse' or 'file'");
  if (const auto m = n["morse"]) {
    rd.check_keys(m, name + ".morse",
                  {"depth_hartree", "depth_cm1", "range_per_bohr", "r_eq_bohr", "r_eq_angstrom", "offset_hartree",
                   "offset_cm1"});
    c.source = CurveConfig::Source::Morse;
    const auto depth = rd.quantity(m, "depth", kEnergy);
    const auto req = rd.quantity(m, "r_eq", kLength);
    if (!depth || !(*depth > 0.0)) rd.fail(m, name + ".morse: positive depth_hartree or depth_cm1 required");
    if (!req || !(*req > 0.0)) rd.fail(m, name + ".morse: positive r_eq_bohr required");
    if (!m["range_per_bohr"]) rd.fail(m, name + ".morse: range_per_bohr required");
    c.depth = *depth;
    c.r_eq = *req;
    c.range = rd.positive(m["range_per_bohr"], "range_per_bohr");
    c.offset = rd.quantity(m, "offset", kEnergy).value_or(0.0);
  } else if (const auto f = n["file"]) {
    c.source = CurveConfig::Source::File;
    std::filesystem::path p(rd.get<std::string>(f, "file"));
    if (p.is_relative()) p = base_dir / p;
    c.path = p.lexically_normal().string();
    if (!std::filesystem::exists(p)) rd.fail(f, "potential file not found: " + c.path);
    if (const auto u = n["energy_unit"]) {
      const auto s = rd.get<std::string>(u, "energy_unit");
      if (s == "hartree") c.energy_scale = 1.0;
      else if (s == "cm1") c.energy_scale = units::cm1_to_hartree;
      else rd.fail(u, "energy_unit must be hartree or cm1");
    }
    if (const auto u = n["length_unit"]) {
      const auto s = rd.get<std::string>(u, "length_unit");
      if (s == "bohr") c.length_scale = 1.0;
      else if (s == "angstrom") c.length_scale = 1e-10 / units::bohr_m;
      else rd.fail(u, "length_unit must be bohr or angstrom");
    }
    if (const auto t = n["tail"]) {
      rd.check_keys(t, name + ".tail", {"power", "asymptote_hartree", "asymptote_cm1"});
      LongRangeTail tail;
      if (t["power"]) tail.power = rd.positive(t["power"], "power");
      const auto a = rd.quantity(t, "asymptote", kEnergy);
      if (!a) rd.fail(t, name + ".tail: asymptote_hartree required");
      tail.asymptote = *a;
      c.tail = tail;
    }
  } else {
    rd.fail(n, name + ": a 'morse' parameter set or a 'file' is required");
  }
  return c;
}

inline StageConfig parse_stage(const Reader& rd, const YAML::Node& n) {
  StageConfig s;
  if (n.IsScalar()) {
    std::istringstream in(rd.get<std::string>(n, "pipeline stage"));
    std::string name;
    in >> name;
    if (name == "optimize") {
      s.kind = StageConfig::Kind::Optimize;
    } else if (name == "reduce_intensity") {
      s.kind = StageConfig::Kind::ReduceIntensity;
      if (!(in >> s.factor) || !(s.factor >= 1.0)) rd.fail(n, "reduce_intensity needs a factor >= 1");
    } else if (name == "compress_time") {
      s.kind = StageConfig::Kind::CompressTime;
      if (!(in >> s.keep_every) || s.keep_every < 1) rd.fail(n, "compress_time needs an integer k >= 1");
    } else {
      rd.fail(n, "unknown pipeline stage '" + name + "' (optimize, reduce_intensity F, compress_time K)");
    }
    std::string extra;
    while (in >> extra) {
      const auto eq = extra.find('=');
      if (s.kind != StageConfig::Kind::Optimize || eq == std::string::npos) {
        rd.fail(n, "trailing text in pipeline stage: '" + extra + "'");
      }
      const std::string key = extra.substr(0, eq), value = extra.substr(eq + 1);
      std::istringstream v(value);
      if (key == "target_F") {
        double f = 0.0;
        if (!(v >> f) || !v.eof() || !(f > 0.0 && f <= 1.0)) rd.fail(n, "optimize: target_F must lie in (0, 1]");
        s.target_F = f;
      } else if (key == "max_iterations") {
        int m = 0;
        if (!(v >> m) || !v.eof() || m < 0) rd.fail(n, "optimize: max_iterations must be >= 0");
        s.max_iterations = m;
      } else {
        rd.fail(n, "unknown optimize option '" + key + "' (target_F, max_iterations)");
      }
    }
    return s;
  }
  rd.fail(n, "pipeline stages are strings such as 'optimize' or 'compress_time 4'");
}

}  // namespace config_detail

inline RunConfig parse_config(const YAML::Node& root, const std::string& file, const std::filesystem::path& base_dir) {
  using namespace config_detail;
  const Reader rd(file);
  RunConfig c;
  c.source = file;
  if (!root.IsMap()) rd.fail(root, "top level must be a mapping");
  rd.check_keys(root, "top level",
                {"system", "two_level", "potentials", "grid", "levels", "time", "guess", "penalty", "stop", "pipeline",
                 "compression", "propagation", "output", "seed"});

  if (const auto tl = root["two_level"]) {
    rd.check_keys(tl, "two_level", {"gap_hartree", "gap_cm1", "dipole_au"});
    for (const char* sec : {"system", "potentials", "grid"}) {
      if (root[sec]) rd.fail(root[sec], std::string("section '") + sec + "' does not apply to a two_level system");
    }
    c.two_level_gap = rd.quantity(tl, "gap", kEnergy);
    if (!c.two_level_gap || !(*c.two_level_gap > 0.0)) rd.fail(tl, "two_level: positive gap_hartree or gap_cm1 required");
    if (tl["dipole_au"]) c.dipole = rd.positive(tl["dipole_au"], "dipole_au");
    c.n_points = 1;
    c.n_levels = 1;
    c.target_channel = Channel::Excited;
    if (root["levels"]) rd.fail(root["levels"], "a two_level system always runs ground -> excited; drop 'levels'");
  } else {
    const auto sys = root["system"];
    if (!sys) rd.fail("missing section 'system'");
    rd.check_keys(sys, "system", {"mass_amu", "mass_me", "dipole_au"});
    const auto mass = rd.quantity(sys, "mass", {{"amu", units::amu_to_me}, {"me", 1.0}});
    if (!mass || !(*mass > 0.0)) rd.fail(sys, "system: positive mass_amu or mass_me required");
    c.mass = *mass;
    if (sys["dipole_au"]) c.dipole = rd.positive(sys["dipole_au"], "dipole_au");

    const auto pots = root["potentials"];
    if (!pots) rd.fail("missing section 'potentials'");
    rd.check_keys(pots, "potentials", {"ground", "excited"});
    if (!pots["ground"] || !pots["excited"]) rd.fail(pots, "potentials: 'ground' and 'excited' are required");
    c.ground = parse_curve(rd, pots["ground"], "ground", base_dir);
    c.excited = parse_curve(rd, pots["excited"], "excited", base_dir);

    const auto grid = root["grid"];
    if (!grid) rd.fail("missing section 'grid'");
    rd.check_keys(grid, "grid",
                  {"n_points", "r_min_bohr", "r_min_angstrom", "r_max_bohr", "r_max_angstrom", "e_max_hartree",
                   "e_max_cm1", "beta"});
    if (grid["n_points"]) c.n_points = rd.get<int>(grid["n_points"], "n_points");
    if (c.n_points < 16) rd.fail(grid["n_points"] ? grid["n_points"] : grid, "grid: n_points must be >= 16");
    const auto rmin = rd.quantity(grid, "r_min", kLength), rmax = rd.quantity(grid, "r_max", kLength);
    if (!rmin || !rmax) rd.fail(grid, "grid: r_min_bohr and r_max_bohr required");
    c.r_min = *rmin;
    c.r_max = *rmax;
    if (!(c.r_min > 0.0 && c.r_max > c.r_min)) rd.fail(grid, "grid: need 0 < r_min < r_max");
    c.e_max = rd.quantity(grid, "e_max", kEnergy);
    if (grid["beta"]) {
      c.beta = rd.get<double>(grid["beta"], "beta");
      if (!(c.beta >= 1.0)) rd.fail(grid["beta"], "grid: beta must be >= 1");
    }

    if (const auto lv = root["levels"]) {
      rd.check_keys(lv, "levels", {"count", "initial", "target", "target_channel"});
      if (lv["count"]) c.n_levels = rd.get<int>(lv["count"], "count");
      if (lv["initial"]) c.initial_level = rd.get<int>(lv["initial"], "initial");
      if (lv["target"]) c.target_level = rd.get<int>(lv["target"], "target");
      if (const auto ch = lv["target_channel"]) {
        const auto s = rd.get<std::string>(ch, "target_channel");
        if (s == "ground") c.target_channel = Channel::Ground;
        else if (s == "excited") c.target_channel = Channel::Excited;
        else rd.fail(ch, "levels: target_channel must be ground or excited");
      }
      if (c.n_levels < 1 || c.n_levels > c.n_points) rd.fail(lv, "levels: count must lie in [1, n_points]");
      if (c.initial_level < 0 || c.initial_level >= c.n_levels || c.target_level < 0 ||
          c.target_level >= c.n_levels) {
        rd.fail(lv, "levels: initial and target must lie below count");
      }
    }
  }

  const auto tm = root["time"];
  if (!tm) rd.fail("missing section 'time'");
  rd.check_keys(tm, "time", {"T", "T_au", "T_fs", "T_ps", "n_steps", "dt_au", "dt_fs"});
  if (const auto t = tm["T"]) {
    if (rd.get<std::string>(t, "T") != "auto") rd.fail(t, "time: T accepts only 'auto'; use T_fs, T_ps or T_au");
  }
  c.duration = rd.quantity(tm, "T", kTime);
  if (tm["T"] && c.duration) rd.fail(tm, "time: both T: auto and an explicit duration given");
  if (c.duration && !(*c.duration > 0.0)) rd.fail(tm, "time: duration must be positive");
  if (const auto n = tm["n_steps"]) {
    c.n_steps = rd.get<int>(n, "n_steps");
    if (*c.n_steps < 10) rd.fail(n, "time: n_steps must be >= 10");
  }
  c.dt = rd.quantity(tm, "dt", kTime);
  if (c.dt && !(*c.dt > 0.0)) rd.fail(tm, "time: dt must be positive");
  if (c.n_steps.has_value() == c.dt.has_value()) rd.fail(tm, "time: give exactly one of n_steps and dt_au/dt_fs");
  if (!c.duration && !c.dt) rd.fail(tm, "time: automatic T requires dt_au or dt_fs");
  if (!c.duration && c.two_level_gap) rd.fail(tm, "time: a two_level system has no T*; give T_fs, T_ps or T_au");

  if (const auto g = root["guess"]) {
    rd.check_keys(g, "guess",
                  {"amplitude_au", "centers_cm1", "centers_au", "fc_transitions", "envelope", "fwhm_fs", "fwhm_ps",
                   "fwhm_au", "offsets_fs", "offsets_ps", "offsets_au", "shape"});
    if (g["amplitude_au"]) {
      c.amplitude = rd.get<double>(g["amplitude_au"], "amplitude_au");
      if (!(c.amplitude >= 0.0)) rd.fail(g["amplitude_au"], "guess: amplitude must be >= 0");
    }
    if (g["centers_cm1"]) {
      for (double w : rd.list(g["centers_cm1"], "centers_cm1")) c.centers.push_back(w * units::cm1_to_hartree);
    }
    if (g["centers_au"]) {
      for (double w : rd.list(g["centers_au"], "centers_au")) c.centers.push_back(w);
    }
    for (double w : c.centers) {
      if (!(w > 0.0)) rd.fail(g, "guess: carrier frequencies must be positive");
    }
    if (const auto fc = g["fc_transitions"]) {
      if (!fc.IsSequence()) rd.fail(fc, "guess: fc_transitions is a list of [v, v'] pairs");
      for (const auto& pair : fc) {
        if (!pair.IsSequence() || pair.size() != 2) rd.fail(pair, "guess: fc_transitions entries are [v, v'] pairs");
        const int v = rd.get<int>(pair[0], "v"), w = rd.get<int>(pair[1], "v'");
        if (v < 0 || w < 0 || v >= c.n_levels || w >= c.n_levels) rd.fail(pair, "guess: level out of range");
        c.fc_transitions.emplace_back(v, w);
      }
    }
    if (const auto e = g["envelope"]) {
      const auto s = rd.get<std::string>(e, "envelope");
      if (s == "gaussian") c.envelope = EnvelopeKind::Gaussian;
      else if (s == "train") c.envelope = EnvelopeKind::GaussianTrain;
      else if (s == "sin2") c.envelope = EnvelopeKind::Sin2;
      else if (s == "flat") c.envelope = EnvelopeKind::Flat;
      else rd.fail(e, "guess: envelope must be gaussian, train, sin2 or flat");
    }
    if (const auto f = rd.quantity(g, "fwhm", kTime)) c.fwhm = *f;
    for (const auto& [suffix, scale] : kTime) {
      if (const auto o = g["offsets_" + suffix]) {
        for (double t : rd.list(o, "offsets_" + suffix)) c.offsets.push_back(t * scale);
      }
    }
    if (const auto s = g["shape"]) {
      const auto name = rd.get<std::string>(s, "shape");
      if (name == "sin2") c.update_shape = ShapeFunction::sin2();
      else if (name == "sine") c.update_shape = ShapeFunction::sine();
      else if (name == "flat") c.update_shape = ShapeFunction::flat();
      else rd.fail(s, "guess: shape must be sin2, sine or flat");
    }
    if ((c.envelope == EnvelopeKind::Gaussian || c.envelope == EnvelopeKind::GaussianTrain) && !(c.fwhm > 0.0) &&
        c.amplitude > 0.0) {
      rd.fail(g, "guess: gaussian envelopes need fwhm_fs");
    }
    if (c.envelope == EnvelopeKind::GaussianTrain && c.offsets.empty()) rd.fail(g, "guess: train needs offsets");
  }

  if (const auto p = root["penalty"]) {
    rd.check_keys(p, "penalty", {"kind", "alpha", "alpha_small", "alpha_large", "alpha_switch", "alpha2_fraction"});
    if (const auto k = p["kind"]) {
      const auto s = rd.get<std::string>(k, "kind");
      if (s == "quadratic") c.penalty = PenaltyKind::Quadratic;
      else if (s == "restricted") c.penalty = PenaltyKind::Restricted;
      else rd.fail(k, "penalty: kind must be quadratic or restricted");
    }
    if (p["alpha"]) {
      if (p["alpha_small"] || p["alpha_large"]) rd.fail(p, "penalty: give alpha or alpha_small/alpha_large");
      c.alpha = AlphaSchedule::constant(rd.positive(p["alpha"], "alpha"));
    }
    if (p["alpha_small"]) c.alpha.small = rd.positive(p["alpha_small"], "alpha_small");
    if (p["alpha_large"]) c.alpha.large = rd.positive(p["alpha_large"], "alpha_large");
    if (p["alpha_switch"]) c.alpha.switch_iteration = rd.get<int>(p["alpha_switch"], "alpha_switch");
    if (const auto a2 = p["alpha2_fraction"]) {
      c.alpha2_fraction = rd.get<double>(a2, "alpha2_fraction");
      if (!(c.alpha2_fraction >= 0.0 && c.alpha2_fraction < 1.0)) {
        rd.fail(a2, "penalty: alpha2_fraction must lie in [0, 1) so that alpha_01 > alpha_02");
      }
      if (c.penalty != PenaltyKind::Restricted && c.alpha2_fraction != 0.0) {
        rd.fail(a2, "penalty: alpha2_fraction applies to the restricted penalty only");
      }
    }
  }

  if (const auto s = root["stop"]) {
    rd.check_keys(s, "stop", {"target_F", "max_iterations", "stagnation_window", "stagnation_threshold"});
    if (s["target_F"]) c.stop.target_F = rd.get<double>(s["target_F"], "target_F");
    if (!(c.stop.target_F > 0.0 && c.stop.target_F <= 1.0)) rd.fail(s, "stop: target_F must lie in (0, 1]");
    if (s["max_iterations"]) c.stop.max_iterations = rd.get<int>(s["max_iterations"], "max_iterations");
    if (c.stop.max_iterations < 0) rd.fail(s, "stop: max_iterations must be >= 0");
    if (s["stagnation_window"]) c.stop.stagnation_window = rd.get<int>(s["stagnation_window"], "stagnation_window");
    if (s["stagnation_threshold"]) {
      c.stop.stagnation_threshold = rd.get<double>(s["stagnation_threshold"], "stagnation_threshold");
    }
  }

  if (const auto pl = root["pipeline"]) {
    if (!pl.IsSequence() || pl.size() == 0) rd.fail(pl, "pipeline must be a nonempty list of stages");
    c.pipeline.clear();
    for (const auto& st : pl) c.pipeline.push_back(parse_stage(rd, st));
  }

  if (const auto cm = root["compression"]) {
    rd.check_keys(cm, "compression", {"mode", "energy_fraction"});
    if (const auto m = cm["mode"]) {
      const auto s = rd.get<std::string>(m, "mode");
      if (s == "asymmetric") c.compression.mode = Decimation::Asymmetric;
      else if (s == "symmetric") c.compression.mode = Decimation::Symmetric;
      else rd.fail(m, "compression: mode must be asymmetric or symmetric");
    }
    if (cm["energy_fraction"]) c.compression.energy_fraction = rd.positive(cm["energy_fraction"], "energy_fraction");
  }

  if (const auto pr = root["propagation"]) {
    rd.check_keys(pr, "propagation", {"tolerance"});
    if (pr["tolerance"]) c.propagation_tolerance = rd.positive(pr["tolerance"], "tolerance");
  }

  if (const auto o = root["output"]) {
    rd.check_keys(o, "output",
                  {"directory", "checkpoint_every", "memory_budget_mb", "beam_radius_um", "census_thresholds",
                   "spectrum_window", "population_stride"});
    if (o["directory"]) c.output_dir = rd.get<std::string>(o["directory"], "directory");
    if (o["checkpoint_every"]) {
      c.checkpoint_every = rd.get<int>(o["checkpoint_every"], "checkpoint_every");
      if (c.checkpoint_every < 0) rd.fail(o["checkpoint_every"], "output: checkpoint_every must be >= 0");
    }
    if (o["memory_budget_mb"]) c.memory_budget_mb = rd.positive(o["memory_budget_mb"], "memory_budget_mb");
    if (o["beam_radius_um"]) c.beam_radius = rd.positive(o["beam_radius_um"], "beam_radius_um") * 1e-6;
    if (o["census_thresholds"]) {
      c.census_thresholds = rd.list(o["census_thresholds"], "census_thresholds");
      for (double t : c.census_thresholds) {
        if (!(t > 0.0 && t < 1.0)) rd.fail(o["census_thresholds"], "output: census thresholds must lie in (0, 1)");
      }
    }
    if (const auto w = o["spectrum_window"]) {
      const auto s = rd.get<std::string>(w, "spectrum_window");
      if (s == "rectangular") c.spectrum_window = SpectrumWindow::Rectangular;
      else if (s == "raised_cosine") c.spectrum_window = SpectrumWindow::RaisedCosine;
      else rd.fail(w, "output: spectrum_window must be rectangular or raised_cosine");
    }
    if (o["population_stride"]) {
      c.population_stride = rd.get<int>(o["population_stride"], "population_stride");
      if (c.population_stride < 1) rd.fail(o["population_stride"], "output: population_stride must be >= 1");
    }
  }
  if (root["seed"]) c.seed = rd.get<std::uint64_t>(root["seed"], "seed");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoFailure("config file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::ParserException& e) {
    throw InvalidInput(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  } catch (const YAML::BadFile&) {
    throw IoFailure("cannot read config file " + path);
  }
  return parse_config(root, path, std::filesystem::path(path).parent_path());
}

inline RunConfig config_from_string(const std::string& text, const std::string& name = "<string>",
                                    const std::filesystem::path& base_dir = ".") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw InvalidInput(name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_config(root, name, base_dir);
}

}  // namespace vibctl
