#include <doctest.h>

#include "qwalk/error.hpp"
#include "qwalk/experiment.hpp"

using namespace qwalk;

TEST_CASE("minimal config takes the defaults") {
  const ExperimentConfig c = parse_config(R"({"z": [0, 1, 2]})");
  CHECK(c.name == "experiment");
  CHECK(c.lattice.rows == 49);
  CHECK(c.lattice.cols == 49);
  CHECK(c.lattice.dh_um == 13.5);
  CHECK(c.lattice.dv_um == 15.0);
  CHECK(c.lattice.cutoff_um == 31.0);
  CHECK(c.backend == Backend::spectral);
  CHECK(!c.injection);
  CHECK(c.z_values == std::vector<double>{0, 1, 2});
  CHECK(c.wants(Observable::grids));
  CHECK(!c.wants(Observable::polya));
}

TEST_CASE("full config") {
  const ExperimentConfig c = parse_config(R"({
  "name": "demo",
  "lattice": {"rows": 5, "cols": 7, "dv_um": 14, "dh_um": 12,
              "cutoff_um": 20,
              "coupling": {"nearest": 0.4, "kappa": 0.25}},
  "beta": 3.5,
  "injection": {"row": 1, "col": 2},
  "z": {"start": 0, "stop": 1, "step": 0.25},
  "backend": "krylov",
  "krylov": {"max_subspace": 12, "tol": 1e-9, "max_steps": 500},
  "observables": ["variance", "p0", "polya", "similarity"],
  "classical": true,
  "polya": {"sample_period": 0.25, "max_terms": 4},
  "output": {"dir": "out/demo", "svg": false,
             "heatmap": {"spot_sigma_px": 2, "canvas_px": 200, "colormap": "gray"}}
})");
  CHECK(c.name == "demo");
  CHECK(c.lattice.rows == 5);
  CHECK(c.lattice.cols == 7);
  CHECK(c.beta == 3.5);
  CHECK(c.injection == Site{1, 2});
  CHECK(c.z_values == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
  CHECK(c.backend == Backend::krylov);
  CHECK(c.krylov.max_subspace == 12);
  CHECK(c.krylov.tol == 1e-9);
  CHECK(c.classical);
  CHECK(c.polya_terms == 4);
  CHECK(c.out_dir == "out/demo");
  CHECK(!c.svg);
  CHECK(c.heatmap.colormap == "gray");
  // Equal nearest-neighbour couplings along both axes.
  CHECK(coupling_coefficient(c.lattice.coupling, 12, 0) ==
        doctest::Approx(0.4).epsilon(1e-14));
  CHECK(coupling_coefficient(c.lattice.coupling, 0, 14) ==
        doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("config_to_json round-trips") {
  const ExperimentConfig c = parse_config(R"({
  "name": "rt", "lattice": {"rows": 3, "cols": 4},
  "z": [0, 0.1, 0.30000000000000004], "injection": {"row": 0, "col": 3},
  "observables": ["grids", "p0"], "backend": "krylov"})");
  const std::string text = config_to_json(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(back.z_values == c.z_values);
  CHECK(back.injection == c.injection);
  CHECK(back.backend == c.backend);
  CHECK(back.lattice.coupling.amp_h == c.lattice.coupling.amp_h);
  CHECK(config_to_json(back) == text);
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text, "cfg.json");
    } catch (const InvalidArgument& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message("{\n  \"z\": [0],\n  \"bogus\": 1\n}").rfind("cfg.json:3:", 0) == 0);
  CHECK(message("{\n  \"z\": [0],\n  \"lattice\": {\n    \"rows\": -1\n  }\n}")
            .rfind("cfg.json:4: lattice.rows", 0) == 0);
  CHECK(message("{\n  \"z\": [1, 0]\n}").rfind("cfg.json:2:", 0) == 0);
  CHECK(message("{\n  \"z\": [0],\n  \"backend\": \"magic\"\n}")
            .rfind("cfg.json:3:", 0) == 0);
  CHECK(message("{\n  \"z\": [0],\n  \"observables\": [\"colour\"]\n}")
            .rfind("cfg.json:3:", 0) == 0);
  CHECK(message("{\n  \"z\": [0,\n}").rfind("cfg.json:", 0) == 0);
  CHECK(message("{\"lattice\": {}}").find("missing required key") !=
        std::string::npos);
  CHECK(message("{\"z\": [0], \"injection\": {\"row\": 60, \"col\": 0}}")
            .find("outside") != std::string::npos);
  CHECK(message("{\"z\": [0, 1], \"observables\": [\"similarity\"]}") != "");
  CHECK(message("{\"z\": [0, 1], \"observables\": [\"polya\"]}")
            .find("polya") != std::string::npos);
  CHECK(message("{\"z\": [0, 1], \"observables\": [\"slope\"]}") != "");
}

TEST_CASE("z range expansion avoids accumulated drift") {
  const std::vector<double> z = ZRange{0.0, 1.0, 0.1}.expand();
  REQUIRE(z.size() == 11);
  CHECK(z[3] == 0.1 * 3);
  CHECK(z.back() == doctest::Approx(1.0));
}

TEST_CASE("resolve_out_dir precedence") {
  ExperimentConfig c = parse_config(R"({"name": "n1", "z": [0]})");
  RunOptions opts;
  opts.out_dir = "cli/dir";
  CHECK(resolve_out_dir(c, opts) == "cli/dir");
  c.out_dir = "cfg/dir";
  CHECK(resolve_out_dir(c, {}) == "cfg/dir");
  c.out_dir.reset();
  CHECK(resolve_out_dir(c, {}).filename() == "n1");
}
