#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>

#include "test_support.hpp"

using qwalk::test::slurp;
using qwalk::test::spit;
using qwalk::test::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string output;
};

Outcome qwalk_cli(const std::string& args) {
  const std::string cmd = std::string(QWALK_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) o.output.append(buf, n);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

const char* kSmallConfig = R"({
  "name": "cli",
  "lattice": {"rows": 5, "cols": 5},
  "z": [0, 0.5, 1],
  "observables": ["grids", "variance", "p0"]
}
)";

}  // namespace

TEST_CASE("cli validate") {
  TempDir dir("cli-validate");
  spit(dir / "good.json", kSmallConfig);
  spit(dir / "bad.json", "{\n  \"z\": [0],\n  \"lattice\": {\"rows\": 0}\n}\n");
  CHECK(qwalk_cli("validate " + (dir / "good.json").string()).status == 0);
  const Outcome bad = qwalk_cli("validate " + (dir / "bad.json").string());
  CHECK(bad.status == 2);
  CHECK(bad.output.find("bad.json:3:") != std::string::npos);
  CHECK(qwalk_cli("--version").output.find("1.0.0") != std::string::npos);
  CHECK(qwalk_cli("").status != 0);
}

TEST_CASE("cli run, render, compare and observables") {
  TempDir dir("cli-run");
  spit(dir / "cfg.json", kSmallConfig);
  const fs::path out = dir / "out";
  const Outcome run = qwalk_cli("run " + (dir / "cfg.json").string() +
                                " --out-dir " + out.string() + " --no-svg");
  REQUIRE(run.status == 0);
  CHECK(fs::exists(out / "grid_0002.csv"));
  CHECK(!fs::exists(out / "heatmap_0002.svg"));

  const Outcome render = qwalk_cli("render " + (out / "grid_0002.csv").string() +
                                   " --out-dir " + (dir / "svg").string());
  CHECK(render.status == 0);
  CHECK(slurp(dir / "svg" / "grid_0002.svg").find("class=\"spot\"") !=
        std::string::npos);

  const Outcome same = qwalk_cli("compare " + (out / "grid_0001.csv").string() +
                                 " " + (out / "grid_0001.csv").string());
  CHECK(same.status == 0);
  CHECK(same.output == "1\n");

  const Outcome analysed = qwalk_cli("observables " + out.string());
  CHECK(analysed.status == 0);
  CHECK(slurp(out / "analysis" / "variance.csv") == slurp(out / "variance.csv"));

  spit(dir / "broken.csv", "z,row,col,probability\n0,0,0,x\n");
  const Outcome broken = qwalk_cli("render " + (dir / "broken.csv").string());
  CHECK(broken.status == 2);
  CHECK(broken.output.find("broken.csv:2:") != std::string::npos);
}

TEST_CASE("cli reports numerical failures with their stage") {
  TempDir dir("cli-fail");
  spit(dir / "cfg.json", R"({
  "lattice": {"rows": 5, "cols": 5}, "z": [0, 40], "backend": "krylov",
  "krylov": {"max_subspace": 3, "tol": 1e-12, "max_steps": 2}
})");
  const Outcome o = qwalk_cli("run " + (dir / "cfg.json").string() +
                              " --out-dir " + (dir / "out").string());
  CHECK(o.status == 3);
  CHECK(o.output.find("evolution") != std::string::npos);
  CHECK(slurp(dir / "out" / "manifest.json").find("\"failed\"") !=
        std::string::npos);
}
