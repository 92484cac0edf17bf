#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "vibctl/config.hpp"
#include "vibctl/pipeline.hpp"

using namespace vibctl;

namespace {

const std::string kBase = R"(system:
  mass_me: 5000
potentials:
  ground:
    morse: {depth_hartree: 0.04, range_per_bohr: 1.0, r_eq_bohr: 5.0}
  excited:
    morse: {depth_cm1: 6584.2, range_per_bohr: 0.8, r_eq_angstrom: 2.91, offset_hartree: 0.05}
grid:
  n_points: 128
  r_min_bohr: 3.5
  r_max_bohr: 14.0
levels:
  initial: 2
  target: 0
time:
  T_fs: 50
  dt_au: 5
)";

std::string error_of(const std::string& text) {
  try {
    config_from_string(text, "cfg.yaml");
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesUnitsAndDefaults) {
  const auto c = config_from_string(kBase + "guess:\n  amplitude_au: 0.004\n  centers_cm1: [10000, 11000]\n");
  EXPECT_EQ(c.mass, 5000.0);
  EXPECT_NEAR(c.excited.depth, 6584.2 * units::cm1_to_hartree, 1e-15);
  EXPECT_NEAR(c.excited.r_eq, 2.91e-10 / units::bohr_m, 1e-12);
  ASSERT_TRUE(c.duration.has_value());
  EXPECT_NEAR(*c.duration, 50.0 * units::fs_to_au, 1e-9);
  EXPECT_EQ(c.dt.value(), 5.0);
  EXPECT_EQ(c.centers.size(), 2u);
  EXPECT_NEAR(c.centers[1], 11000.0 * units::cm1_to_hartree, 1e-15);
  EXPECT_EQ(c.pipeline.size(), 1u);
  EXPECT_EQ(c.stop.target_F, 0.99);
  EXPECT_EQ(c.beam_radius, 300e-6);
  EXPECT_FALSE(c.e_max.has_value());
}

TEST(Config, PipelineStages) {
  const auto c = config_from_string(kBase + "pipeline:\n  - optimize\n  - reduce_intensity 2\n  - optimize\n"
                                            "  - compress_time 4\n  - optimize\n");
  ASSERT_EQ(c.pipeline.size(), 5u);
  EXPECT_EQ(c.pipeline[1].kind, StageConfig::Kind::ReduceIntensity);
  EXPECT_EQ(c.pipeline[1].factor, 2.0);
  EXPECT_EQ(c.pipeline[3].keep_every, 4);
  EXPECT_EQ(c.pipeline[3].describe(), "compress_time 4");
  const auto o = config_from_string(kBase + "pipeline:\n  - optimize target_F=0.9 max_iterations=40\n");
  EXPECT_EQ(o.pipeline[0].target_F.value(), 0.9);
  EXPECT_EQ(o.pipeline[0].max_iterations.value(), 40);
  EXPECT_EQ(o.pipeline[0].describe(), "optimize target_F=0.9 max_iterations=40");
  EXPECT_NE(error_of(kBase + "pipeline:\n  - optimize alpha=3\n").find("unknown optimize option"), std::string::npos);
  EXPECT_NE(error_of(kBase + "pipeline:\n  - optimize target_F=2\n").find("target_F"), std::string::npos);
  EXPECT_NE(error_of(kBase + "pipeline:\n  - stretch 2\n").find("unknown pipeline stage"), std::string::npos);
  EXPECT_NE(error_of(kBase + "pipeline:\n  - reduce_intensity 0.5\n").find("factor >= 1"), std::string::npos);
}

TEST(Config, ErrorsCarryFileAndLine) {
  const std::string bad = kBase + "penalty:\n  alpah: 3\n";
  const auto msg = error_of(bad);
  EXPECT_NE(msg.find("cfg.yaml:19"), std::string::npos) << msg;
  EXPECT_NE(msg.find("alpah"), std::string::npos) << msg;
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_NE(error_of(kBase + "penalty:\n  alpha: -1\n").find("positive"), std::string::npos);
  EXPECT_NE(error_of(kBase + "penalty:\n  kind: restricted\n  alpha2_fraction: 1.0\n").find("alpha2_fraction"),
            std::string::npos);
  EXPECT_NE(error_of(kBase + "stop:\n  target_F: 1.5\n").find("target_F"), std::string::npos);
  EXPECT_NE(error_of(kBase + "unknown_section: 1\n").find("unknown key"), std::string::npos);
  EXPECT_NE(error_of(kBase + "guess:\n  envelope: train\n  fwhm_fs: 10\n  amplitude_au: 0.01\n").find("offsets"),
            std::string::npos);
  EXPECT_NE(error_of("system: [1, 2\n").find("cfg.yaml:"), std::string::npos);
}

TEST(Config, TimeNeedsExactlyOneResolution) {
  std::string both = kBase;
  both.replace(both.find("  dt_au: 5\n"), 10, "  dt_au: 5\n  n_steps: 100\n");
  EXPECT_NE(error_of(both).find("exactly one"), std::string::npos);
}

TEST(Config, MissingFileIsAnIoFailure) {
  EXPECT_THROW(load_config("/nonexistent/run.yaml"), IoFailure);
}

TEST(Config, PotentialFileResolvedAgainstConfigDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "vibctl_cfg_test";
  std::filesystem::create_directories(dir);
  std::string text = kBase;
  text.replace(text.find("    morse: {depth_hartree: 0.04"), std::string("    morse: {depth_hartree: 0.04, range_per_bohr: 1.0, r_eq_bohr: 5.0}").size(),
               "    file: curves/missing.dat");
  try {
    config_from_string(text, "cfg.yaml", dir);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find((dir / "curves/missing.dat").string()), std::string::npos) << e.what();
  }
}

TEST(Model, AutoDurationIsTwiceTStar) {
  std::string text = kBase;
  text.replace(text.find("  T_fs: 50\n"), 11, "  T: auto\n");
  const auto c = config_from_string(text);
  const auto m = build_model(c);
  ASSERT_TRUE(m.hint.has_value());
  EXPECT_EQ(m.hint_level, 2);
  EXPECT_NEAR(m.tgrid.duration(), 2.0 * m.hint->t_star, 5.0);
  for (const auto& w : m.warnings) EXPECT_EQ(w.find("below T*"), std::string::npos) << w;
}

TEST(Model, WarnsWhenDurationBelowTStar) {
  std::string text = kBase;
  text.replace(text.find("  T_fs: 50\n"), 11, "  T_fs: 5\n");
  const auto m = build_model(config_from_string(text));
  ASSERT_FALSE(m.warnings.empty());
  EXPECT_NE(m.warnings.back().find("below T*"), std::string::npos);
}

TEST(Model, FranckCondonCarriers) {
  const auto c = config_from_string(kBase + "guess:\n  amplitude_au: 0.004\n  fc_transitions: [[2, 1]]\n");
  const auto m = build_model(c);
  ASSERT_EQ(m.carriers.size(), 1u);
  EXPECT_NEAR(m.carriers[0], m.excited.energies(1) - m.ground.energies(2), 1e-15);
}

TEST(Config, TwoLevelSystem) {
  const std::string text = "two_level:\n  gap_cm1: 20000\n  dipole_au: 0.5\ntime:\n  T_au: 400\n  n_steps: 800\n";
  const auto c = config_from_string(text);
  ASSERT_TRUE(c.two_level_gap.has_value());
  EXPECT_NEAR(*c.two_level_gap, 20000.0 * units::cm1_to_hartree, 1e-15);
  EXPECT_EQ(c.dipole, 0.5);
  EXPECT_EQ(c.target_channel, Channel::Excited);
  const auto m = build_model(c);
  EXPECT_EQ(m.system->n_points(), 1);
  EXPECT_FALSE(m.hint.has_value());
  EXPECT_NEAR(m.fc.frequencies(0, 0), *c.two_level_gap, 1e-15);
  EXPECT_NE(error_of(text + "grid:\n  n_points: 64\n").find("does not apply"), std::string::npos);
  std::string automatic = text;
  automatic.replace(automatic.find("  T_au: 400\n"), 12, "  T: auto\n  dt_au: 0.5\n");
  automatic.replace(automatic.find("  n_steps: 800\n"), 15, "");
  EXPECT_NE(error_of(automatic).find("no T*"), std::string::npos);
}

TEST(Config, ExcitedTargetChannel) {
  std::string text = kBase;
  text.replace(text.find("  target: 0\n"), 12, "  target: 0\n  target_channel: excited\n");
  const auto c = config_from_string(text);
  EXPECT_EQ(c.target_channel, Channel::Excited);
  const auto m = build_model(c);
  const auto p = make_run_problem(c, m, m.tgrid);
  EXPECT_NEAR(p.target.e.norm(), m.excited.state(0).norm(), 1e-14);
  EXPECT_EQ(p.target.g.norm(), 0.0);
  text.replace(text.find("target_channel: excited") + 16, 7, "both");
  EXPECT_NE(error_of(text).find("target_channel"), std::string::npos);
}
