#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tmatch/config.hpp"
#include "tmatch/report.hpp"

using namespace tmatch;
namespace fs = std::filesystem;

namespace {

const char* kPresets[] = {"self-match.toml",  "unrelated-template.toml", "rotation.toml",         "garner-1.toml",
                          "garner-2.toml",    "garner-4.toml",           "microscope-default.toml", "bounds.toml"};

std::string preset_path(const char* name) { return std::string(TMATCH_PRESETS_DIR) + "/" + name; }

}  // namespace

TEST(Toml, ScalarsArraysAndComments) {
  const auto d = toml::parse(R"(# header
top = 1
[a]
x = 1.5          # trailing
n = -3
big = 1_000
s = "q\"uote"
lit = 'C:\path'
on = true
arr = [1, 2.5,
       3]   # spans lines
[b.c]
y = 1e-3
)");
  EXPECT_EQ(d.at("top"), toml::Value{std::int64_t{1}});
  EXPECT_EQ(d.at("a.x"), toml::Value{1.5});
  EXPECT_EQ(d.at("a.n"), toml::Value{std::int64_t{-3}});
  EXPECT_EQ(d.at("a.big"), toml::Value{std::int64_t{1000}});
  EXPECT_EQ(d.at("a.s"), toml::Value{std::string("q\"uote")});
  EXPECT_EQ(d.at("a.lit"), toml::Value{std::string("C:\\path")});
  EXPECT_EQ(d.at("a.on"), toml::Value{true});
  ASSERT_TRUE(d.at("a.arr").is_array());
  EXPECT_EQ(std::get<toml::Array>(d.at("a.arr").v).size(), 3u);
  EXPECT_EQ(d.at("b.c.y"), toml::Value{1e-3});
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    toml::parse("[a]\nx = 1\nx = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(toml::parse("[a\nx = 1\n"), ConfigError);
  EXPECT_THROW(toml::parse("x = \"open\n"), ConfigError);
  EXPECT_THROW(toml::parse("x = [1, 2\n"), ConfigError);
  EXPECT_THROW(toml::parse("x = 1 y\n"), ConfigError);
  EXPECT_THROW(toml::parse_file("/nonexistent/file.toml"), InputError);
}

TEST(Settings, UnknownKeysAndTypeMismatches) {
  EXPECT_THROW(settings_from_string("[adapt]\ngama1 = 1.0\n"), ConfigError);
  EXPECT_THROW(settings_from_string("[run]\nrecord_stride = 1.5\n"), ConfigError);
  EXPECT_THROW(settings_from_string("[run]\nkind = \"spin\"\n"), ConfigError);
  EXPECT_THROW(settings_from_string("[adapt]\ntheta1_range = [1.0]\n"), ConfigError);
  EXPECT_THROW(settings_from_string("[detector]\nenabled = 1\n"), ConfigError);
  const auto s = settings_from_string("[adapt]\ngamma1 = 2\n");
  EXPECT_EQ(s.run.adapt.gamma1, 2.0);
}

TEST(Settings, OverridesApplyAfterFile) {
  Settings s = load_settings(preset_path("self-match.toml"));
  EXPECT_EQ(s.run.adapt.gamma2, 0.01);
  apply_override(s, "adapt.gamma2=0.02");
  apply_override(s, "run.kind = \"rotate\"");
  apply_override(s, "detector.enabled=false");
  apply_override(s, "match.templates=[\"blob:3\", \"blob:4\"]");
  EXPECT_EQ(s.run.adapt.gamma2, 0.02);
  EXPECT_EQ(s.run.kind, PerturbKind::Rotate);
  EXPECT_FALSE(s.run.detector.enabled);
  EXPECT_EQ(s.match.templates, (std::vector<std::string>{"blob:3", "blob:4"}));
  apply_override(s, "run.kind=identity");
  EXPECT_EQ(s.run.kind, PerturbKind::Identity);
  EXPECT_THROW(apply_override(s, "adapt.gamma2"), ConfigError);
  EXPECT_THROW(apply_override(s, "=1"), ConfigError);
  EXPECT_THROW(apply_override(s, "adapt.nope=1"), ConfigError);
}

TEST(Settings, PresetsLoadAndRoundTripThroughToml) {
  for (const char* name : kPresets) {
    const Settings s = load_settings(preset_path(name));
    const std::string text = to_toml(s);
    const Settings back = settings_from_string(text);
    EXPECT_EQ(to_toml(back), text) << name;
  }
}

TEST(Settings, RoundTripThroughJson) {
  for (const char* name : kPresets) {
    const Settings s = load_settings(preset_path(name));
    const Json j = to_json(s);
    const Settings back = settings_from_json(Json::parse(j.dump()));
    EXPECT_EQ(to_toml(back), to_toml(s)) << name;
  }
  EXPECT_THROW(settings_from_json(Json::array()), ConfigError);
  EXPECT_THROW(settings_from_json(Json{{"adapt", {{"bogus", 1}}}}), ConfigError);
}

TEST(Settings, ShortestRoundTripDoubles) {
  Settings s;
  s.run.adapt.gamma2 = 0.1 + 0.2;
  s.run.theta2 = 1e-300;
  const Settings back = settings_from_string(to_toml(s));
  EXPECT_EQ(back.run.adapt.gamma2, s.run.adapt.gamma2);
  EXPECT_EQ(back.run.theta2, s.run.theta2);
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ImageSource, BuiltinsAndPgm) {
  const auto b = load_image_source("blob:7", 16);
  EXPECT_EQ(b.nx(), 16u);
  EXPECT_EQ(max_abs_diff(b, blob_pattern(16, 7)), 0.0);
  const auto g = load_image_source("garner:2:1", 24);
  EXPECT_EQ(g.nx(), 24u);
  EXPECT_THROW(load_image_source("blob:x", 16), ConfigError);
  EXPECT_THROW(load_image_source("blob:1:2", 16), ConfigError);
  EXPECT_THROW(load_image_source("garner:3:0", 16), ParameterError);

  const fs::path dir = fs::temp_directory_path() / "tmatch_config_test";
  fs::create_directories(dir);
  write_pgm(b, (dir / "img.pgm").string(), 0.0, b.max_abs(), false);
  const auto p = load_image_source("img.pgm", 16, dir.string());
  EXPECT_EQ(p.nx(), 16u);
  EXPECT_LT(max_abs_diff(p, b * (1.0 / b.max_abs())), 1.0 / 255.0);
  EXPECT_THROW(load_image_source("missing.pgm", 16, dir.string()), InputError);
  {
    std::ofstream bad(dir / "bad.pgm", std::ios::binary);
    bad << "P2\n2 2\n255\n0 0 0 0\n";
  }
  EXPECT_THROW(load_image_source("bad.pgm", 16, dir.string()), InputError);
  fs::remove_all(dir);
}
