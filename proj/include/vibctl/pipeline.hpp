#pragma once

// End-to-end runs driven by a RunConfig: model setup, guess, staged
// optimization, diagnostics and checkpoints.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "hamiltonian.hpp"
#include "krotov.hpp"
#include "potential.hpp"
#include "propagator.hpp"
#include "strategies.hpp"
#include "units.hpp"

namespace vibctl {

struct Model {
  std::optional<PotentialCurve> ground_curve, excited_curve;  ///< empty for a two-level system
  double e_max = 0.0;
  bool e_max_defaulted = false;
  std::shared_ptr<const ChannelSystem> system;
  EigenBasis ground, excited;
  FranckCondonTable fc;
  std::optional<TimeHint> hint;
  int hint_level = 0;
  TimeGrid tgrid;
  std::vector<double> carriers;  ///< resolved guess carriers (hartree)
  std::vector<std::string> warnings;
};

namespace pipeline_detail {

inline PotentialCurve make_curve(const CurveConfig& c, const std::string& label) {
  if (c.source == CurveConfig::Source::Morse) return PotentialCurve::morse(c.depth, c.range, c.r_eq, c.offset, label);
  return load_potential_file(c.path, label, c.tail, c.energy_scale, c.length_scale);
}

/// Default cutoff: three well depths above the envelope minimum, the well depth
/// measured to the higher asymptote (or to the envelope at r_max).
inline double default_e_max(const PotentialCurve& env, const PotentialCurve& g, const PotentialCurve& e, double r_min,
                            double r_max) {
  double v_min = env(r_min);
  for (int i = 0; i <= 4096; ++i) v_min = std::min(v_min, env(r_min + (r_max - r_min) * i / 4096));
  double top = env(r_max);
  if (g.asymptote() && e.asymptote()) top = std::max(*g.asymptote(), *e.asymptote());
  const double depth = std::max(top - v_min, 1e-6);
  return v_min + 3.0 * depth;
}

/// Drops log rows past (stage, iteration) so a resumed run appends cleanly.
inline void truncate_log(const std::string& path, int stage, int iteration) {
  std::ifstream in(path);
  if (!in) throw IoFailure("resume: cannot read " + path);
  std::string kept, line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      std::istringstream row(line);
      int s = 0, it = 0;
      row >> s >> it;
      if (s > stage || (s == stage && it > iteration)) continue;
    }
    kept += line + '\n';
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << kept;
  if (!out) throw IoFailure("resume: cannot rewrite " + path);
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace pipeline_detail

inline Model build_model(const RunConfig& cfg) {
  using namespace pipeline_detail;
  Model m;
  if (cfg.two_level_gap) {
    m.system = std::make_shared<const ChannelSystem>(two_level_system(0.0, *cfg.two_level_gap, cfg.dipole));
  } else {
    m.ground_curve = make_curve(cfg.ground, "ground");
    m.excited_curve = make_curve(cfg.excited, "excited");
    const auto env = envelope_of(*m.ground_curve, *m.excited_curve);
    if (!env.covers(cfg.r_min, cfg.r_max)) {
      for (const auto* c : {&*m.ground_curve, &*m.excited_curve}) {
        if (!c->covers(cfg.r_min, cfg.r_max)) {
          throw InvalidInput(cfg.source + ": grid [" + fmt(cfg.r_min) + ", " + fmt(cfg.r_max) +
                             "] bohr lies outside the " + c->label() + " potential table and no tail is configured");
        }
      }
    }
    m.e_max_defaulted = !cfg.e_max.has_value();
    m.e_max = cfg.e_max ? *cfg.e_max : default_e_max(env, *m.ground_curve, *m.excited_curve, cfg.r_min, cfg.r_max);

    GridSpec gs;
    gs.n_points = cfg.n_points;
    gs.r_min = cfg.r_min;
    gs.r_max = cfg.r_max;
    gs.e_max = m.e_max;
    gs.beta = cfg.beta;
    gs.mass = cfg.mass;
    const SpatialGrid grid = build_mapped_grid(env, gs);
    if (grid.required_points > grid.n_points) {
      m.warnings.push_back("n_points=" + std::to_string(grid.n_points) + " is below the estimated requirement " +
                           fmt(grid.required_points) + " for beta=" + fmt(cfg.beta));
    }
    m.system = std::make_shared<const ChannelSystem>(
        build_system(*m.ground_curve, *m.excited_curve, grid, cfg.mass, cfg.dipole));
  }
  m.ground = eigenstates(*m.system, Channel::Ground, cfg.n_levels);
  m.excited = eigenstates(*m.system, Channel::Excited, cfg.n_levels);
  m.fc = franck_condon_map(m.ground, m.excited);

  m.hint_level = std::max({cfg.initial_level, cfg.target_level, 1});
  if (m.hint_level < m.ground.n_bound && m.hint_level < m.ground.size()) {
    m.hint = minimal_time_hint(m.ground, m.hint_level);
  }
  double duration = 0.0;
  if (cfg.duration) {
    duration = *cfg.duration;
  } else {
    if (!m.hint) throw InvalidInput(cfg.source + ": T: auto needs a bound level above v=0 to define T*");
    duration = m.hint->recommended;
  }
  const int steps = cfg.n_steps ? *cfg.n_steps : static_cast<int>(std::ceil(duration / *cfg.dt - 1e-9));
  if (steps < 10) throw InvalidInput(cfg.source + ": fewer than 10 time steps");
  m.tgrid = TimeGrid::from_duration(duration, steps);
  if (m.hint && duration < m.hint->t_star) {
    m.warnings.push_back("T=" + fmt(duration * units::au_time_fs) + " fs is below T*=" +
                         fmt(m.hint->t_star * units::au_time_fs) + " fs for v=" + std::to_string(m.hint_level));
  }

  m.carriers = cfg.centers;
  for (const auto& [v, w] : cfg.fc_transitions) {
    const double omega = m.fc.frequencies(v, w);
    if (!(omega > 0.0)) {
      throw InvalidInput(cfg.source + ": fc transition [" + std::to_string(v) + ", " + std::to_string(w) +
                         "] has a non-positive frequency");
    }
    m.carriers.push_back(omega);
  }
  return m;
}

/// Ground level `initial_level` to level `target_level` of the target channel.
inline ControlProblem make_run_problem(const RunConfig& cfg, const Model& m, const TimeGrid& tg) {
  if (cfg.target_channel == Channel::Ground) {
    return make_vibrational_problem(m.system, m.ground, cfg.initial_level, cfg.target_level, tg);
  }
  return make_problem(m.system, StateVector::ground_only(m.ground.state(cfg.initial_level)),
                      StateVector::excited_only(m.excited.state(cfg.target_level)), tg);
}

inline ControlField build_guess(const RunConfig& cfg, const Model& m) {
  GuessSpec g;
  g.amplitude = cfg.amplitude;
  g.centers = m.carriers;
  g.envelope = cfg.envelope;
  g.fwhm = cfg.fwhm;
  g.offsets = cfg.offsets;
  if (g.amplitude > 0.0 && g.centers.empty()) throw InvalidInput(cfg.source + ": guess has an amplitude but no carriers");
  return make_guess(g, m.tgrid, cfg.update_shape);
}

/// Human-readable echo of every resolved parameter.
inline void write_report(std::ostream& out, const RunConfig& cfg, const Model& m) {
  using pipeline_detail::fmt;
  out << "config            " << cfg.source << '\n';
  if (cfg.two_level_gap) {
    out << "two-level         gap=" << fmt(*cfg.two_level_gap) << " hartree ("
        << fmt(*cfg.two_level_gap * units::hartree_to_cm1) << " cm-1) dipole=" << fmt(cfg.dipole) << " au\n";
  } else {
    out << "mass              " << fmt(cfg.mass) << " m_e (" << fmt(cfg.mass / units::amu_to_me) << " amu)\n";
    out << "dipole            " << fmt(cfg.dipole) << " au\n";
    auto curve = [&](const char* name, const CurveConfig& c) {
      out << std::left << std::setw(18) << name;
      if (c.source == CurveConfig::Source::Morse) {
        out << "morse depth=" << fmt(c.depth) << " hartree range=" << fmt(c.range) << "/bohr r_eq=" << fmt(c.r_eq)
            << " bohr offset=" << fmt(c.offset) << " hartree\n";
      } else {
        out << "file " << c.path;
        if (c.tail) out << " tail power=" << fmt(c.tail->power) << " asymptote=" << fmt(c.tail->asymptote) << " hartree";
        out << '\n';
      }
    };
    curve("ground", cfg.ground);
    curve("excited", cfg.excited);
    const auto& grid = m.system->grid;
    out << "grid              n_points=" << cfg.n_points << " r=[" << fmt(cfg.r_min) << ", " << fmt(cfg.r_max)
        << "] bohr beta=" << fmt(cfg.beta) << " e_max=" << fmt(m.e_max) << " hartree"
        << (m.e_max_defaulted ? " (default)" : "") << " required_points=" << fmt(grid.required_points) << '\n';
    out << "bound levels      ground=" << m.ground.n_bound << " excited=" << m.excited.n_bound << " (of "
        << cfg.n_levels << " computed)\n";
  }
  out << "levels            initial v=" << cfg.initial_level << " target v=" << cfg.target_level << " ("
      << channel_name(cfg.target_channel) << ")\n";
  if (m.hint) {
    out << "T*                " << fmt(m.hint->t_star) << " au = " << fmt(m.hint->t_star * units::au_time_fs)
        << " fs (v=" << m.hint_level << ")\n";
    out << "recommended T     " << fmt(m.hint->recommended) << " au = "
        << fmt(m.hint->recommended * units::au_time_fs) << " fs\n";
  }
  out << "time              T=" << fmt(m.tgrid.duration()) << " au = " << fmt(m.tgrid.duration() * units::au_time_fs)
      << " fs" << (cfg.duration ? "" : " (auto 2T*)") << " n_steps=" << m.tgrid.n_steps << " dt=" << fmt(m.tgrid.dt)
      << " au\n";
  out << "guess             amplitude=" << fmt(cfg.amplitude) << " au carriers_cm1=";
  for (std::size_t i = 0; i < m.carriers.size(); ++i) out << (i ? "," : "") << fmt(m.carriers[i] * units::hartree_to_cm1);
  const char* env_names[] = {"gaussian", "train", "sin2", "flat"};
  out << " envelope=" << env_names[static_cast<int>(cfg.envelope)];
  if (cfg.fwhm > 0.0) out << " fwhm=" << fmt(cfg.fwhm * units::au_time_fs) << " fs";
  out << '\n';
  out << "penalty           " << (cfg.penalty == PenaltyKind::Quadratic ? "quadratic" : "restricted")
      << " alpha_small=" << fmt(cfg.alpha.small) << " alpha_large=" << fmt(cfg.alpha.large)
      << " alpha_switch=" << cfg.alpha.switch_iteration;
  if (cfg.penalty == PenaltyKind::Restricted) out << " alpha2_fraction=" << fmt(cfg.alpha2_fraction);
  out << '\n';
  out << "stop              target_F=" << fmt(cfg.stop.target_F) << " max_iterations=" << cfg.stop.max_iterations
      << " stagnation=" << fmt(cfg.stop.stagnation_threshold) << "/" << cfg.stop.stagnation_window << '\n';
  out << "pipeline          ";
  for (std::size_t i = 0; i < cfg.pipeline.size(); ++i) out << (i ? " -> " : "") << cfg.pipeline[i].describe();
  out << '\n';
  out << "compression       " << (cfg.compression.mode == Decimation::Asymmetric ? "asymmetric" : "symmetric")
      << " energy_fraction=" << fmt(cfg.compression.energy_fraction) << '\n';
  out << "propagation       tolerance=" << fmt(cfg.propagation_tolerance) << '\n';
  out << "output            directory=" << cfg.output_dir << " checkpoint_every=" << cfg.checkpoint_every
      << " memory_budget_mb=" << fmt(cfg.memory_budget_mb) << " beam_radius_um=" << fmt(cfg.beam_radius * 1e6)
      << " population_stride=" << cfg.population_stride << '\n';
  out << "census            thresholds=";
  for (std::size_t i = 0; i < cfg.census_thresholds.size(); ++i) out << (i ? "," : "") << fmt(cfg.census_thresholds[i]);
  out << " spectrum_window=" << (cfg.spectrum_window == SpectrumWindow::Rectangular ? "rectangular" : "raised_cosine")
      << '\n';
  out << "seed              " << cfg.seed << '\n';

  // Candidate carrier windows: strongest FC partners of the initial and target levels.
  for (int v : {cfg.initial_level, cfg.target_level}) {
    std::vector<int> idx(static_cast<std::size_t>(m.fc.factors.cols()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return m.fc.factors(v, a) > m.fc.factors(v, b); });
    out << "fc advice v=" << std::setw(3) << std::left << v << "    ";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, idx.size()); ++i) {
      out << "v'=" << idx[i] << ":" << fmt(m.fc.frequencies(v, idx[i]) * units::hartree_to_cm1) << "cm-1(FC "
          << fmt(m.fc.factors(v, idx[i])) << ") ";
    }
    out << '\n';
  }
  for (const auto& w : m.warnings) out << "warning: " << w << '\n';
}

struct RunOverrides {
  std::optional<std::string> output_dir;
  std::optional<int> max_iterations;
  std::optional<std::uint64_t> seed;
};

inline void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (o.max_iterations) {
    if (*o.max_iterations < 0) throw InvalidInput("--max-iterations must be >= 0");
    cfg.stop.max_iterations = *o.max_iterations;
    for (auto& st : cfg.pipeline) st.max_iterations.reset();
  }
  if (o.seed) cfg.seed = *o.seed;
}

/// Where a resumed run picks up.
struct ResumePoint {
  int stage = 0;
  int iteration = 0;
  ControlField field;
  ControlField stage_start;
};

struct StageResult {
  std::string description;
  double F = 0.0;
  int iterations = 0;
  std::string stop_reason;
};

struct RunSummary {
  double final_F = 0.0;
  std::vector<StageResult> stages;
  ControlField final_field;
  std::string output_dir;
};

namespace pipeline_detail {

inline std::string log_line(int stage, const IterationRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d %d %.16e %.16e %.16e %.16e %.16e %.6g", stage, r.iteration, r.F, r.J, r.penalty,
                r.delta1, r.min_delta2, r.alpha);
  return buf;
}

inline std::string spill_dir(const std::string& output_dir) {
  if (const char* env = std::getenv("VIBCTL_SPILL_DIR"); env && *env) return env;
  return output_dir;
}

}  // namespace pipeline_detail

/// Runs every stage of the pipeline, writing artifacts to cfg.output_dir.
inline RunSummary run_pipeline(const RunConfig& cfg, std::ostream& log, const std::optional<ResumePoint>& resume = {}) {
  namespace fs = std::filesystem;
  using pipeline_detail::fmt;
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoFailure("cannot create output directory " + out.string() + ": " + ec.message());

  const Model m = build_model(cfg);
  for (const auto& w : m.warnings) log << "warning: " << w << '\n';
  {
    std::ofstream rep(out / "resolved_config.txt");
    if (!rep) throw IoFailure("cannot write " + (out / "resolved_config.txt").string());
    write_report(rep, cfg, m);
  }
  write_eigenvalues((out / "eigen_ground.dat").string(), m.ground);
  write_eigenvalues((out / "eigen_excited.dat").string(), m.excited);
  write_fc_table((out / "fc_table.dat").string(), m.fc);

  const ControlField guess = build_guess(cfg, m);
  const fs::path config_abs = fs::absolute(cfg.source);
  FieldHeader base_header{{"config", config_abs.string()}, {"seed", std::to_string(cfg.seed)}};
  if (!resume) write_field((out / "guess_field.dat").string(), guess, base_header);

  if (resume) pipeline_detail::truncate_log((out / "convergence.log").string(), resume->stage, resume->iteration);
  std::ofstream conv(out / "convergence.log", resume ? std::ios::app : std::ios::trunc);
  if (!conv) throw IoFailure("cannot write " + (out / "convergence.log").string());
  if (!resume) conv << "# stage iteration F J penalty delta1 min_delta2 alpha\n";
  else conv << "# resumed at stage " << resume->stage << " iteration " << resume->iteration << '\n';

  PropagationOptions popts;
  popts.tolerance = cfg.propagation_tolerance;

  RunSummary summary;
  summary.output_dir = out.string();
  ControlField field = resume ? resume->field : guess;
  const std::size_t first_stage = resume ? static_cast<std::size_t>(resume->stage) : 0;
  if (first_stage >= cfg.pipeline.size()) throw InvalidInput("resume: stage index beyond the pipeline");

  for (std::size_t si = first_stage; si < cfg.pipeline.size(); ++si) {
    const auto& stage = cfg.pipeline[si];
    const int sidx = static_cast<int>(si);
    StageResult sr;
    sr.description = stage.describe();
    const bool resumed_here = resume && si == first_stage;
    switch (stage.kind) {
      case StageConfig::Kind::ReduceIntensity:
        field = reduce_intensity_restart(field, stage.factor);
        break;
      case StageConfig::Kind::CompressTime: {
        auto c = compress_time(field, stage.keep_every, cfg.compression);
        field = std::move(c.field);
        break;
      }
      case StageConfig::Kind::Optimize: {
        const ControlField stage_start = resumed_here ? resume->stage_start : field;
        const std::string start_path = (out / ("stage" + std::to_string(sidx) + "_start.dat")).string();
        if (!resumed_here) write_field(start_path, stage_start, base_header);
        const auto problem = make_run_problem(cfg, m, field.tgrid);
        PenaltySettings pen;
        pen.kind = cfg.penalty;
        pen.alpha = cfg.alpha;
        pen.alpha2_fraction = cfg.alpha2_fraction;
        if (pen.kind == PenaltyKind::Restricted) pen.reference = stage_start.values;
        StopCriteria stop = cfg.stop;
        if (stage.target_F) stop.target_F = *stage.target_F;
        const int start_it = resumed_here ? resume->iteration : 0;
        stop.max_iterations = std::max(0, stage.max_iterations.value_or(cfg.stop.max_iterations) - start_it);

        OptimizeOptions oo;
        oo.propagation = popts;
        oo.start_iteration = start_it;
        oo.checkpoint_every = cfg.checkpoint_every;
        const std::size_t budget = static_cast<std::size_t>(cfg.memory_budget_mb * 1024.0 * 1024.0);
        const std::string spill = pipeline_detail::spill_dir(cfg.output_dir);
        const int np = m.system->n_points(), ns = field.tgrid.n_steps;
        oo.make_store = [=] { return make_trajectory_store(np, ns, budget, spill, "stage" + std::to_string(sidx)); };
        oo.on_iteration = [&](const IterationRecord& r) {
          if (resumed_here && r.iteration == start_it) return;  // already logged before the interruption
          conv << pipeline_detail::log_line(sidx, r) << '\n';
          conv.flush();
        };
        oo.on_checkpoint = [&](const IterationRecord& r, const ControlField& f) {
          FieldHeader h = base_header;
          h["kind"] = "checkpoint";
          h["output_dir"] = fs::absolute(out).string();
          h["stage"] = std::to_string(sidx);
          h["iteration"] = std::to_string(r.iteration);
          h["F"] = detail::fmt17(r.F);
          h["J"] = detail::fmt17(r.J);
          h["stage_start"] = fs::absolute(start_path).string();
          write_field((out / "checkpoint.dat").string(), f, h);
        };
        const auto run = optimize(problem, field, pen, stop, oo);
        if (cfg.checkpoint_every > 0) oo.on_checkpoint(run.records.back(), run.field);
        field = run.field;
        sr.iterations = run.records.back().iteration;
        sr.stop_reason = run.stop_reason;
        log << "stage " << sidx << " (" << sr.description << "): F=" << fmt(run.final_F()) << " after iteration "
            << sr.iterations << ", " << run.stop_reason << '\n';
        break;
      }
    }
    write_field((out / ("stage" + std::to_string(sidx) + "_field.dat")).string(), field, base_header);
    const auto problem = make_run_problem(cfg, m, field.tgrid);
    sr.F = objective(problem, field, popts);
    summary.stages.push_back(sr);
  }
  summary.final_field = field;
  summary.final_F = summary.stages.back().F;

  // Diagnostics of the final field.
  FieldHeader fh = base_header;
  fh["F"] = detail::fmt17(summary.final_F);
  write_field((out / "optimal_field.dat").string(), field, fh);
  const Spectrum spec = pulse_spectrum(field, cfg.spectrum_window);
  write_spectrum((out / "spectrum.dat").string(), spec);

  const auto& sys = *m.system;
  std::vector<StateVector> states;
  std::vector<double> times;
  StateVector psi = StateVector::ground_only(m.ground.state(cfg.initial_level));
  ChebychevPropagator prop(sys, popts);
  prop.set_field_cap(field.max_abs(), field.tgrid.dt);
  const int ns = field.tgrid.n_steps;
  for (int k = 0; k <= ns; ++k) {
    if (k % cfg.population_stride == 0 || k == ns) {
      states.push_back(psi);
      times.push_back(field.tgrid.state_time(k));
    }
    if (k < ns) prop.step(psi, field.values[k], field.tgrid.dt, Direction::Forward);
  }
  const auto trace = population_trace(states, times, m.ground, m.excited);
  write_populations((out / "populations_ground.dat").string(), trace, Channel::Ground);
  write_populations((out / "populations_excited.dat").string(), trace, Channel::Excited);
  const auto census = threshold_census(trace, cfg.census_thresholds);
  write_census((out / "census.dat").string(), census);

  const double e_guess = pulse_energy(guess, cfg.beam_radius);
  const double e_final = pulse_energy(field, cfg.beam_radius);
  {
    std::ofstream s(out / "summary.txt");
    if (!s) throw IoFailure("cannot write " + (out / "summary.txt").string());
    s << "final_F " << detail::fmt17(summary.final_F) << '\n';
    for (std::size_t i = 0; i < summary.stages.size(); ++i) {
      const auto& st = summary.stages[i];
      s << "stage " << first_stage + i << ' ' << st.description << " F=" << fmt(st.F);
      if (!st.stop_reason.empty()) s << " iterations=" << st.iterations << " stop=\"" << st.stop_reason << '"';
      s << '\n';
    }
    s << "pulse_energy_guess_mJ " << fmt(e_guess * 1e3) << '\n';
    s << "pulse_energy_final_mJ " << fmt(e_final * 1e3) << '\n';
    s << "beam_radius_um " << fmt(cfg.beam_radius * 1e6) << '\n';
    s << "duration_fs " << fmt(field.tgrid.duration() * units::au_time_fs) << '\n';
    s << "# threshold census: levels exceeding the threshold at any time\n";
    s << "# threshold ground excited\n";
    for (const auto& r : census) s << fmt(r.threshold) << ' ' << r.ground_count << ' ' << r.excited_count << '\n';
    s << "seed " << cfg.seed << '\n';
  }
  log << "final F=" << fmt(summary.final_F) << ", pulse energy " << fmt(e_final * 1e3) << " mJ, artifacts in "
      << out.string() << '\n';
  return summary;
}

/// Reads a checkpoint written by run_pipeline and continues the run.
inline RunSummary resume_pipeline(const std::string& checkpoint, const RunOverrides& o, std::ostream& log) {
  const FieldFile ff = read_field(checkpoint);
  auto need = [&](const char* key) -> const std::string& {
    auto it = ff.header.find(key);
    if (it == ff.header.end()) throw InvalidInput(checkpoint + ": not a checkpoint (missing '" + key + "')");
    return it->second;
  };
  if (need("kind") != "checkpoint") throw InvalidInput(checkpoint + ": not a checkpoint file");
  RunConfig cfg = load_config(need("config"));
  cfg.output_dir = need("output_dir");
  cfg.seed = std::stoull(need("seed"));
  apply_overrides(cfg, o);
  ResumePoint rp;
  rp.stage = std::stoi(need("stage"));
  rp.iteration = std::stoi(need("iteration"));
  rp.field = ff.field;
  rp.stage_start = read_field(need("stage_start")).field;
  log << "resuming " << cfg.source << " at stage " << rp.stage << ", iteration " << rp.iteration << '\n';
  return run_pipeline(cfg, log, rp);
}

}  // namespace vibctl
