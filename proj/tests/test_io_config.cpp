#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tnoodl/config.hpp"
#include "tnoodl/io.hpp"
#include "tnoodl/preprocess.hpp"
#include "tnoodl/rng.hpp"

namespace tnoodl {
namespace {

template <typename Fn>
std::size_t parse_error_line(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

DenseTensor3 parse_tnsr3_text(const std::string& s) {
  std::istringstream in(s);
  return parse_tnsr3(in);
}

TEST(Tnsr3, ParsesWithCommentsAndGaps) {
  const auto z = parse_tnsr3_text("# counts\nTNSR3 2 2 1\n1 1 1 3.5\n\n2 2 1 -1 # note\n");
  EXPECT_EQ(z.n(), 2u);
  EXPECT_EQ(z(0, 0, 0), 3.5);
  EXPECT_EQ(z(1, 1, 0), -1.0);
  EXPECT_EQ(z(1, 0, 0), 0.0);
}

TEST(Tnsr3, ErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR2 1 1 1\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR3 2 2 2\n1 1 1\n"); }), 2u);
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR3 2 2 2\n\n3 1 1 1\n"); }), 3u);
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR3 2 2 2\n1 1 1 1\n1 1 1 2\n"); }), 3u);
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR3 2 2 2\n0 1 1 1\n"); }), 2u);
  EXPECT_EQ(parse_error_line([] { parse_tnsr3_text("TNSR3 2 2 2\n1 1 1 nan\n"); }), 2u);
  EXPECT_THROW(parse_tnsr3_text("# nothing\n"), ParseError);
}

TEST(Tnsr3, WriteParseRoundTrip) {
  Rng rng(51);
  DenseTensor3 z(3, 4, 2);
  for (double& v : z.data()) v = rng.bernoulli(0.4) ? rng.normal() : 0.0;
  std::stringstream ss;
  write_tnsr3(ss, z);
  EXPECT_EQ(parse_tnsr3(ss), z);
}

TEST(MatrixCsv, BitExactRoundTrip) {
  Rng rng(52);
  Matrix m = oracle::random_matrix(7, 5, rng);
  m(0, 0) = std::numeric_limits<double>::denorm_min();
  m(1, 0) = -std::numeric_limits<double>::max();
  m(2, 0) = 0.1;
  std::stringstream ss;
  write_matrix_csv(ss, m);
  EXPECT_EQ(parse_matrix_csv(ss), m);
}

TEST(MatrixCsv, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_matrix_csv(in);
  };
  EXPECT_EQ(parse_error_line([&] { parse("2;2\n"); }), 1u);
  EXPECT_EQ(parse_error_line([&] { parse("2,2\n1,2\n3\n"); }), 3u);
  EXPECT_EQ(parse_error_line([&] { parse("1,2\n1,x\n"); }), 2u);
  EXPECT_THROW(parse("2,1\n1\n"), ParseError);
  EXPECT_EQ(parse("1,2\n+1.5,-2\n"), Matrix::from_rows({{1.5, -2}}));
}

TEST(MatrixCsv, FileRoundTripAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "tnoodl_io_test";
  std::filesystem::create_directories(dir);
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  write_matrix_csv(dir / "m.csv", m);
  EXPECT_EQ(read_matrix_csv(dir / "m.csv"), m);
  EXPECT_THROW(read_matrix_csv(dir / "absent.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
}

TEST(Preprocess, DynamicRange) {
  DenseTensor3 z(1, 3, 1, {0.0, 1.0, 8.0});
  const auto out = preprocess_dynamic_range(z);
  EXPECT_EQ(out(0, 0, 0), 0.0);
  EXPECT_EQ(out(0, 1, 0), 1.0);
  EXPECT_EQ(out(0, 2, 0), 4.0);
  EXPECT_THROW(preprocess_dynamic_range(DenseTensor3(1, 1, 1, {0.5})), NumericError);
}

TEST(Preprocess, ScaleAndCenter) {
  DenseTensor3 z(2, 2, 1, {2.0, -4.0, 0.0, 0.0});
  const auto s = scale_by_max(z);
  EXPECT_EQ(s(0, 0, 0), 0.5);
  EXPECT_EQ(s(1, 0, 0), -1.0);
  const auto c = center_fibers(z);
  EXPECT_EQ(c(0, 0, 0), 3.0);
  EXPECT_EQ(c(1, 0, 0), -3.0);
  EXPECT_EQ(c(0, 1, 0), 0.0);  // zero fiber untouched
  EXPECT_EQ(scale_by_max(DenseTensor3(1, 1, 1)), DenseTensor3(1, 1, 1));
}

TEST(Preprocess, PipelineOrder) {
  DenseTensor3 z(2, 1, 1, {1.0, 4.0});
  const auto out = preprocess(z, {true, true, false});  // log -> [1, 3] -> scale
  EXPECT_NEAR(out(0, 0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(out(1, 0, 0), 1.0);
}

TEST(Config, DefaultsResolve) {
  SolverConfig cfg;
  EXPECT_EQ(cfg.iht_steps(), 124u);
  EXPECT_EQ(cfg.dict_step(), 20.0);
  EXPECT_NEAR(cfg.init_distance(), 2.0 / std::log(300.0), 1e-15);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, TextOverridesAndAuto) {
  SolverConfig cfg;
  std::istringstream in("# comment\nm = 10\neta_A=7\nR=30\nR=auto\ndist=subgaussian\n"
                        "tau_schedule=0.3,0.2\nsample_mode=independent_only\n");
  apply_config_text(cfg, in);
  EXPECT_EQ(cfg.m, 10u);
  EXPECT_EQ(cfg.dict_step(), 7.0);
  EXPECT_FALSE(cfg.R.has_value());
  EXPECT_EQ(cfg.dist, FactorDist::BoundedSubGaussian);
  EXPECT_EQ(cfg.tau_schedule, (std::vector<double>{0.3, 0.2}));
  EXPECT_EQ(cfg.sample_mode, SampleMode::IndependentOnly);
}

TEST(Config, ErrorsNameLine) {
  SolverConfig cfg;
  auto apply = [&](const std::string& s) {
    std::istringstream in(s);
    apply_config_text(cfg, in);
  };
  EXPECT_EQ(parse_error_line([&] { apply("n=3\nbogus=1\n"); }), 2u);
  EXPECT_EQ(parse_error_line([&] { apply("no equals sign\n"); }), 1u);
  EXPECT_EQ(parse_error_line([&] { apply("\n\nalpha=abc\n"); }), 3u);
  EXPECT_THROW(apply_setting(cfg, "mode", "sideways"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "record_wall_time", "maybe"), ConfigError);
}

TEST(Config, ValidationRejectsBadValues) {
  auto bad = [](const char* key, const char* value) {
    SolverConfig cfg;
    apply_setting(cfg, key, value);
    EXPECT_THROW(cfg.validate(), ConfigError) << key << "=" << value;
  };
  bad("alpha", "1");
  bad("eta_x", "0");
  bad("tau", "-1");
  bad("eps_T", "0");
  bad("T_max", "0");
  bad("eps0", "2");
  bad("log_every", "0");
  bad("C_lb", "1.5");
}

TEST(Config, WriteThenReadIsStable) {
  SolverConfig cfg;
  apply_setting(cfg, "eta_x_schedule", "0.5,0.25");
  apply_setting(cfg, "seed", "7");
  std::stringstream first;
  write_config(first, cfg);
  SolverConfig back;
  std::istringstream in(first.str());
  apply_config_text(back, in);
  std::stringstream second;
  write_config(second, back);
  EXPECT_EQ(first.str(), second.str());
  std::size_t lines = 0;
  for (char ch : first.str()) lines += ch == '\n';
  EXPECT_EQ(lines, config_keys().size());
}

}  // namespace
}  // namespace tnoodl
