#include <doctest.h>

#include "flipbench/config.hpp"
#include "flipbench/error.hpp"
#include "test_util.hpp"

using namespace flipbench;

namespace {

const ConfigFile::Schema kSchema = {
    {"experiment", {"cores", "calls", "order"}},
    {"output", {"dir"}},
};

std::size_t error_line(std::string_view text) {
  try {
    (void)ConfigFile::parse(text, kSchema);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("sections, comments and whitespace") {
  const auto cfg = ConfigFile::parse(
      "# header comment\n"
      "\n"
      "[experiment]\n"
      "  cores = 0,1,2  \n"
      "calls=7\n"
      "[output]\n"
      "dir = /tmp/x y\n",
      kSchema);
  CHECK(cfg.get("experiment", "cores") == "0,1,2");
  CHECK(cfg.get("experiment", "calls") == "7");
  CHECK(cfg.get("output", "dir") == "/tmp/x y");
  CHECK_FALSE(cfg.get("experiment", "order").has_value());
  CHECK_FALSE(cfg.get("nope", "x").has_value());
}

TEST_CASE("later keys override earlier ones") {
  const auto cfg = ConfigFile::parse("[experiment]\ncalls = 1\ncalls = 2\n", kSchema);
  CHECK(cfg.get("experiment", "calls") == "2");
}

TEST_CASE("errors name the offending line") {
  CHECK(error_line("[experiment]\ncalls = 1\nbogus = 2\n") == 3);
  CHECK(error_line("# c\n[mystery]\n") == 2);
  CHECK(error_line("calls = 1\n") == 1);
  CHECK(error_line("[experiment]\n\njust words\n") == 3);
  CHECK(error_line("[experiment\n") == 1);
}

TEST_CASE("load from disk") {
  flipbench::testing::TempDir dir("config");
  flipbench::testing::spit(dir / "c.ini", "[output]\ndir = out\n");
  CHECK(ConfigFile::load(dir / "c.ini", kSchema).get("output", "dir") == "out");
  CHECK_THROWS_AS(ConfigFile::load(dir / "none.ini", kSchema), InputError);
}
