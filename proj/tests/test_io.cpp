#include <otoclab/config.hpp>
#include <otoclab/io.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace otoclab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("numeric formatting keeps twelve significant digits", "[io]") {
  CHECK(fmt12(0.1) == "0.1");
  CHECK(fmt12(2.0) == "2");
  CHECK(fmt12(1.0 / 3.0) == "0.333333333333");
  CHECK(fmt12(-1.5e-9) == "-1.5e-09");
}

TEST_CASE("metadata header carries version hash and seed", "[io]") {
  auto head = metadata_header("deadbeef00112233", 42);
  CHECK(head.find("#version=0.1.0\n") == 0);
  CHECK(head.find("#config_hash=deadbeef00112233\n") != std::string::npos);
  CHECK(head.find("#seed=42\n") != std::string::npos);
}

TEST_CASE("atomic write replaces files without leaving temporaries", "[io]") {
  auto dir = std::filesystem::temp_directory_path() / "otoclab_io_test";
  std::filesystem::remove_all(dir);
  auto path = dir / "nested" / "out.csv";
  atomic_write(path, "first\n");
  CHECK(slurp(path) == "first\n");
  atomic_write(path, "second\n");
  CHECK(slurp(path) == "second\n");
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep csv lays out the cartesian grid row major", "[io]") {
  auto text = sweep_csv({0.0, 1.0}, {-0.5, 0.5}, {{2.0, 2.0}, {1.0, 1.5}});
  CHECK(text ==
        "r,h,v_B\n"
        "0,-0.5,2\n"
        "0,0.5,2\n"
        "1,-0.5,1\n"
        "1,0.5,1.5\n");
}

TEST_CASE("surface csv carries the documented columns and skips failures", "[io]") {
  SurfacePoint good;
  good.ok = true;
  good.rec.j = 2;
  good.rec.t = 0.25;
  good.rec.f_epr = 0.3;
  good.rec.otoc_est = 1.0 / 1.2;
  good.rec.c = 2.0 - 1.0 / 0.6;
  good.rec.mode = EstimatorMode::exact;
  SurfacePoint bad;
  bad.ok = false;
  bad.error = "boom";
  auto text = surface_csv({good, bad});
  CHECK(text.rfind("j,t,F_EPR,otoc,C,mode,shots,ci\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find(",exact,") != std::string::npos);
  CHECK(text.find("boom") == std::string::npos);
}

TEST_CASE("matrices survive a json round trip through text", "[io]") {
  std::mt19937_64 rng(19);
  Matrix m = random_unitary(4, rng);
  auto restored = matrix_from_json(json::parse(matrix_to_json(m).dump()));
  REQUIRE(restored.rows() == 4);
  CHECK(max_abs(restored - m) == 0.0);
}

TEST_CASE("gate sequences survive a json round trip", "[io]") {
  auto seq = random_brickwall(3, 4, 0.7, 23);
  auto restored = gates_from_json(json::parse(gates_to_json(seq).dump()));
  CHECK(restored.n == 3);
  REQUIRE(restored.layers.size() == 4);
  for (int l = 0; l < 4; ++l) CHECK(max_abs(restored.layers[l] - seq.layers[l]) == 0.0);
  json broken = gates_to_json(seq);
  broken["layers"][0] = json::array();
  CHECK_THROWS(gates_from_json(broken));
}

TEST_CASE("compilation report exposes the optimization summary", "[io]") {
  CompilationResult res;
  res.gates = random_brickwall(2, 1, 0.1, 3);
  res.cost_history = {1.0, 0.5, 0.1};
  res.final_cost = 0.1;
  res.final_error = 0.05;
  res.iterations = 2;
  res.converged = false;
  auto out = compilation_to_json(res);
  CHECK(out["final_cost"].get<double>() == 0.1);
  CHECK(out["cost_history"].size() == 3);
  CHECK_FALSE(out["converged"].get<bool>());
  CHECK(out["gates"]["n"].get<int>() == 2);
}

TEST_CASE("count reports keep outcomes and noise settings together", "[io]") {
  std::map<std::string, long> counts{{"0000", 800}, {"0011", 200}};
  NoiseSpec noise;
  noise.p2 = 0.01;
  noise.p_read = 0.02;
  auto out = counts_to_json(counts, 1000, 9, noise);
  CHECK(out["counts"]["0000"].get<long>() == 800);
  CHECK(out["shots"].get<long>() == 1000);
  CHECK(out["noise"]["p2"].get<double>() == 0.01);
}

TEST_CASE("default config round trips byte identically", "[config]") {
  RunConfig cfg;
  auto text = canonical_config(cfg);
  auto reparsed = config_from_json(json_t::parse(text));
  CHECK(canonical_config(reparsed) == text);
  CHECK(config_hash(cfg) == config_hash(reparsed));
  CHECK(config_hash(cfg).size() == 16);
}

TEST_CASE("customized config round trips and hashes distinctly", "[config]") {
  RunConfig cfg;
  cfg.model = ModelParams{0.8, 1.2, -0.4, 4, Boundary::periodic};
  cfg.mode = "noisy";
  cfg.compiler.type = "rtr";
  cfg.compiler.layers = 10;
  cfg.compiler.trust.restarts = 5;
  cfg.t_max = 2.0;
  cfg.t_step = 0.1;
  cfg.j_list = {2, 4};
  cfg.shots = 5000;
  cfg.noise.p2 = 0.005;
  cfg.noise.p_read = 0.01;
  cfg.seed = 77;
  cfg.n_traj = 32;
  cfg.jobs = 2;
  auto text = canonical_config(cfg);
  auto reparsed = config_from_json(json_t::parse(text));
  CHECK(canonical_config(reparsed) == text);

  RunConfig other = cfg;
  other.seed = 78;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config validation rejects unknown enumerations", "[config]") {
  RunConfig cfg;
  cfg.mode = "approximate";
  CHECK_THROWS(cfg.validate());
  cfg.mode = "exact";
  cfg.compiler.type = "magic";
  CHECK_THROWS(cfg.validate());
  cfg.compiler.type = "rtr";
  cfg.compiler.layers = 0;
  CHECK_THROWS(cfg.validate());

  auto bad = R"({"model": {"boundary": "twisted"}})";
  CHECK_THROWS(config_from_json(json_t::parse(bad)));
  CHECK_THROWS(mode_from_string("bogus"));
}

TEST_CASE("config files load from disk", "[config]") {
  auto dir = std::filesystem::temp_directory_path() / "otoclab_cfg_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "run.json";
  RunConfig cfg;
  cfg.seed = 1234;
  cfg.model.n = 3;
  atomic_write(path, canonical_config(cfg));
  auto loaded = load_config(path.string());
  CHECK(loaded.seed == 1234);
  CHECK(loaded.model.n == 3);
  CHECK_THROWS(load_config((dir / "missing.json").string()));
  std::filesystem::remove_all(dir);
}
