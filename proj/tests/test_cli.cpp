#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "focus/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = focus::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("focus_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  const Result empty = run({});
  CHECK(empty.code == 1);
  CHECK(empty.err.find("gen-world") != std::string::npos);
  CHECK(run({"gen-world", "--bogus"}).code == 1);
  CHECK(run({"no-such-command"}).code == 1);
  CHECK(run({"baseline", "magic"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"--version"}).out.find(focus::cli::kVersion) != std::string::npos);
}

TEST_CASE("missing inputs exit with 2 and bad config keys with 1") {
  const fs::path dir = scratch("errors");
  CHECK(run({"sample", "--world", (dir / "absent.fps").string(), "--out", dir.string()}).code == 2);
  std::ofstream(dir / "bad.ini") << "world.nonsense = 3\n";
  CHECK(run({"gen-world", "--config", (dir / "bad.ini").string(), "--out", dir.string()}).code == 1);
  std::ofstream(dir / "junk.fps") << "not a raster";
  CHECK(run({"sample", "--world", (dir / "junk.fps").string(), "--out", dir.string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("gen-world and sample write outputs and manifests") {
  const fs::path dir = scratch("small");
  std::ofstream(dir / "cfg.ini") << "[world]\nextent = 512\nn_dischargers = 20\n[sample]\nn = 60\n[patch]\nsize = 32\n";
  const std::string cfg = (dir / "cfg.ini").string();
  REQUIRE(run({"gen-world", "--config", cfg, "--seed", "5", "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "world.fps"));
  REQUIRE(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  CHECK(manifest["command"] == "gen-world");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["version"] == focus::cli::kVersion);
  CHECK(manifest.contains("timestamp"));

  REQUIRE(run({"sample", "--config", cfg, "--seed", "5", "--world", (dir / "world.fps").string(), "--out",
               dir.string()})
              .code == 0);
  std::ifstream split(dir / "split.csv");
  std::string header;
  std::getline(split, header);
  CHECK(header == "id,split");
  int rows = 0;
  for (std::string line; std::getline(split, line);) rows += !line.empty();
  CHECK(rows == 60);
  fs::remove_all(dir);
}
