#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "iontrap/config.hpp"
#include "iontrap/io.hpp"

using namespace iontrap;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("iontrap_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(Quantity, Units) {
  EXPECT_NEAR(parse_quantity(json("96 us"), Quantity::time, "t"), units::us_to_au(96.0), 1e-3);
  EXPECT_NEAR(parse_quantity(json("960 ps"), Quantity::time, "t"), units::ps_to_au(960.0), 1e-9);
  EXPECT_DOUBLE_EQ(parse_quantity(json(2.5), Quantity::time, "t"), 2.5);
  EXPECT_DOUBLE_EQ(parse_quantity(json("2.5 au"), Quantity::time, "t"), 2.5);
  EXPECT_NEAR(parse_quantity(json("0.1 Vpm"), Quantity::field, "e"), 1.945e-13, 1e-16);
  EXPECT_NEAR(parse_quantity(json("6.075 nm"), Quantity::length, "z"), 114.8, 0.05);
  EXPECT_DOUBLE_EQ(parse_quantity(json("2.5 MHz"), Quantity::frequency, "f"), 2.5e6);
  EXPECT_NEAR(parse_quantity(json("111 Da"), Quantity::mass, "m"), TrapParams{}.mass, 1e-6);
  EXPECT_THROW(parse_quantity(json("3 MHz"), Quantity::time, "t"), ConfigError);
  EXPECT_THROW(parse_quantity(json("3"), Quantity::frequency, "f"), ConfigError);
  EXPECT_THROW(parse_quantity(json("fast"), Quantity::time, "t"), ConfigError);
  EXPECT_THROW(parse_quantity(json("3 us extra"), Quantity::time, "t"), ConfigError);
  EXPECT_THROW(parse_quantity(json::array(), Quantity::time, "t"), ConfigError);
}

TEST(Config, Presets) {
  const RunConfig desk = RunConfig::desk();
  EXPECT_NO_THROW(desk.validate());
  EXPECT_EQ(desk.trap.computational_size, 4u);
  EXPECT_NEAR(desk.oct.t_pulse / desk.oct.dt, 20000.0, 1e-6);
  const RunConfig paper = RunConfig::paper();
  EXPECT_NO_THROW(paper.validate());
  EXPECT_EQ(paper.trap.dynamical_size, 32u);
  EXPECT_NEAR(paper.oct.t_pulse / paper.oct.dt, 100000.0, 1e-6);
  EXPECT_EQ(paper.packets.size(), 2u);
  EXPECT_THROW(RunConfig::preset("huge"), ConfigError);
}

TEST(Config, ApplyAndReject) {
  const json doc = json::parse(R"({"trap": {"D": 10}, "oct": {"t_pulse": "20 us", "max_iterations": 7},
                                   "dissipation": {"kappa": [1e-18, "2e-18"]}, "filter": {"lo": "1 MHz", "hi": "9 MHz"}})");
  const RunConfig c = apply_config(RunConfig::desk(), doc);
  EXPECT_EQ(c.trap.dynamical_size, 10u);
  EXPECT_NEAR(c.oct.t_pulse, units::us_to_au(20.0), 1e-3);
  EXPECT_EQ(c.oct.max_iterations, 7u);
  EXPECT_EQ(c.kappas, (std::vector<double>{1e-18, 2e-18}));
  ASSERT_TRUE(c.filter.has_value());
  EXPECT_DOUBLE_EQ(c.filter->hi_hz, 9e6);
  EXPECT_THROW(apply_config(RunConfig::desk(), json::parse(R"({"trap": {"DD": 3}})")), ConfigError);
  EXPECT_THROW(apply_config(RunConfig::desk(), json::parse(R"({"extra": 1})")), ConfigError);
  EXPECT_THROW(apply_config(RunConfig::desk(), json::parse(R"({"trap": {"D": -3}})")), ConfigError);
}

TEST(Config, ValidationFailures) {
  RunConfig c = RunConfig::desk();
  c.trap.dynamical_size = 60;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig::desk();
  c.points = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig::desk();
  c.oct.dt = c.oct.t_pulse / 3.3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig::desk();
  c.potential = "cubic";
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, HashTracksContent) {
  const RunConfig a = RunConfig::desk();
  RunConfig b = RunConfig::desk();
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.oct.max_iterations += 1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, KappaList) {
  EXPECT_EQ(parse_kappa_list("1e-18,5e-18"), (std::vector<double>{1e-18, 5e-18}));
  EXPECT_EQ(parse_kappa_list("0"), (std::vector<double>{0.0}));
  EXPECT_THROW(parse_kappa_list(""), ConfigError);
  EXPECT_THROW(parse_kappa_list("-1e-18"), ConfigError);
  EXPECT_THROW(parse_kappa_list("abc"), ConfigError);
}

TEST_F(TempDir, LoadConfigFile) {
  const fs::path p = dir_ / "run.json";
  io::write_atomic(p, R"({"tier": "desk", "sim": {"pulses": 3}})");
  const RunConfig c = load_config(p.string(), "");
  EXPECT_EQ(c.pulses, 3u);
  EXPECT_EQ(c.tier, "desk");
  EXPECT_THROW(load_config((dir_ / "missing.json").string(), ""), ConfigError);
  io::write_atomic(p, "{ not json");
  EXPECT_THROW(load_config(p.string(), ""), ConfigError);
}

TEST_F(TempDir, AtomicWriteLeavesNoTemp) {
  const fs::path p = dir_ / "sub" / "a.txt";
  io::write_atomic(p, "one");
  io::write_atomic(p, "two");
  EXPECT_EQ(io::read_text(p), "two");
  EXPECT_FALSE(fs::exists(dir_ / "sub" / "a.txt.tmp"));
}

TEST_F(TempDir, FieldRoundTrip) {
  ControlField f = ControlField::zeros(units::us_to_au(1.0), units::ns_to_au(2.0));
  for (std::size_t i = 0; i < f.samples.size(); ++i) f.samples[i] = 1e-13 * std::sin(0.01 * i);
  io::save_field(f, dir_ / "field.csv", "abc", 42);
  const auto loaded = io::load_field(dir_ / "field.csv");
  EXPECT_EQ(loaded.iteration, 42);
  EXPECT_EQ(loaded.field.samples, f.samples);
  EXPECT_NEAR(loaded.field.dt, f.dt, 1e-12 * f.dt);
  EXPECT_EQ(io::read_csv(dir_ / "field.csv").comment_value("config_hash"), "abc");
  io::save_field(f, dir_ / "plain.csv", "abc");
  EXPECT_EQ(io::load_field(dir_ / "plain.csv").iteration, -1);
  EXPECT_THROW(io::load_field(dir_ / "nope.csv"), ConfigError);
}

TEST_F(TempDir, GateRoundTrip) {
  GateMatrix g = elementary_gate(SimSystem::harmonic(), make_grid(-2.0, 2.0, 4), 0.6, 10);
  io::save_gate(g, dir_ / "gate.csv", "h");
  const GateMatrix back = io::load_gate(dir_ / "gate.csv");
  EXPECT_EQ((back.entries - g.entries).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(back.steps, 10u);
  EXPECT_DOUBLE_EQ(back.delta_t, 0.6);
  EXPECT_TRUE(fs::exists(dir_ / "gate.json"));
}

TEST_F(TempDir, TraceRoundTrip) {
  std::vector<OctRecord> rec{{0, 1.5, 0.25, 1e-14}, {1, 2.5, 0.5, 2e-14}};
  io::save_trace(rec, dir_ / "trace.csv", "h");
  const auto back = io::load_trace(dir_ / "trace.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].iteration, 1u);
  EXPECT_EQ(back[1].objective, 2.5);
  EXPECT_EQ(back[1].fluence, 2e-14);
}

TEST_F(TempDir, CsvErrors) {
  io::write_atomic(dir_ / "ragged.csv", "a,b\n1,2\n3\n");
  EXPECT_THROW(io::read_csv(dir_ / "ragged.csv"), ConfigError);
  io::write_atomic(dir_ / "text.csv", "a,b\n1,x\n");
  EXPECT_THROW(io::read_csv(dir_ / "text.csv"), ConfigError);
  io::write_atomic(dir_ / "empty.csv", "# only a comment\n");
  EXPECT_THROW(io::read_csv(dir_ / "empty.csv"), ConfigError);
  io::write_atomic(dir_ / "ok.csv", "# k=v other\nx,y\n1,2\n");
  const auto t = io::read_csv(dir_ / "ok.csv");
  EXPECT_EQ(t.comment_value("k"), "v");
  EXPECT_THROW(t.column("z"), ConfigError);
}

TEST(Csv, WriterFormat) {
  io::CsvWriter w("h", {"a", "b", "c"});
  w.row(1, 0.1, "x");
  EXPECT_EQ(w.str(), "# config_hash=h\na,b,c\n1,0.10000000000000001,x\n");
}
