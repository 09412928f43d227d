#include <otoclab/butterfly.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace otoclab;
using Catch::Approx;

TEST_CASE("threshold hit exactly at a sample", "[butterfly]") {
  auto pt = spreading_time({{0.0, 0.0}, {1.0, 0.1}});
  CHECK(pt.quality == CrossingQuality::exact_sample);
  CHECK(pt.t_j == Approx(1.0).margin(1e-15));

  auto mid = spreading_time({{0.0, 0.0}, {0.5, 0.1}, {1.0, 0.3}});
  CHECK(mid.quality == CrossingQuality::exact_sample);
  CHECK(mid.t_j == Approx(0.5).margin(1e-15));
}

TEST_CASE("threshold crossing interpolates between samples", "[butterfly]") {
  auto pt = spreading_time({{0.0, 0.0}, {1.0, 0.2}});
  CHECK(pt.quality == CrossingQuality::interpolated);
  CHECK(pt.t_j == Approx(0.5).margin(1e-12));

  auto later = spreading_time({{0.0, 0.02}, {1.0, 0.06}, {2.0, 0.14}});
  CHECK(later.quality == CrossingQuality::interpolated);
  CHECK(later.t_j == Approx(1.5).margin(1e-12));
}

TEST_CASE("threshold already passed at the first sample", "[butterfly]") {
  auto pt = spreading_time({{0.0, 0.5}, {1.0, 0.9}});
  CHECK(pt.quality == CrossingQuality::exact_sample);
  CHECK(pt.t_j == 0.0);
}

TEST_CASE("threshold never reached", "[butterfly]") {
  auto pt = spreading_time({{0.0, 0.0}, {1.0, 0.05}, {2.0, 0.09}});
  CHECK(pt.quality == CrossingQuality::not_reached);
  CHECK(std::isnan(pt.t_j));
}

TEST_CASE("spreading time validates its series", "[butterfly]") {
  CHECK_THROWS(spreading_time({}));
  CHECK_THROWS(spreading_time({{1.0, 0.0}, {0.5, 0.2}}));
  CHECK_THROWS(spreading_time({{1.0, 0.0}, {1.0, 0.2}}));
}

TEST_CASE("raising the threshold never lowers the crossing time", "[butterfly]") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> incr(0.0, 0.06);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::pair<double, double>> series;
    double c = 0.0;
    for (int i = 0; i <= 40; ++i) {
      series.push_back({0.1 * i, c});
      c += incr(rng);
    }
    auto low = spreading_time(series, 0.1);
    auto high = spreading_time(series, 0.15);
    if (low.quality == CrossingQuality::not_reached) continue;
    if (high.quality == CrossingQuality::not_reached) continue;
    CHECK(high.t_j >= low.t_j - 1e-12);
  }
}

TEST_CASE("perfect ballistic data fits exactly", "[butterfly]") {
  std::vector<SpreadingPoint> pts;
  for (int j = 2; j <= 5; ++j)
    pts.push_back({j, 0.5 * j, CrossingQuality::interpolated});
  auto fit = fit_velocity(pts);
  CHECK(fit.slope == Approx(0.5).margin(1e-12));
  CHECK(fit.intercept == Approx(0.0).margin(1e-12));
  CHECK(fit.v_B == Approx(2.0).margin(1e-12));
  CHECK(fit.residual_rms < 1e-12);
  CHECK(fit.points == 4);
  CHECK(fit.causal);
}

TEST_CASE("two point fit recovers the secant slope", "[butterfly]") {
  std::vector<SpreadingPoint> pts{{2, 1.0, CrossingQuality::interpolated},
                                  {5, 2.5, CrossingQuality::interpolated}};
  auto fit = fit_velocity(pts);
  CHECK(fit.slope == Approx(0.5).margin(1e-12));
  CHECK(fit.v_B == Approx(2.0).margin(1e-12));
}

TEST_CASE("site relabeling shifts the intercept but not the slope", "[butterfly]") {
  std::vector<SpreadingPoint> base, shifted;
  for (int j = 2; j <= 6; ++j) {
    double t = 0.4 * j + 0.1 * ((j * 7) % 3);
    base.push_back({j, t, CrossingQuality::interpolated});
    shifted.push_back({j + 3, t, CrossingQuality::interpolated});
  }
  auto f1 = fit_velocity(base);
  auto f2 = fit_velocity(shifted);
  CHECK(f1.slope == Approx(f2.slope).margin(1e-12));
  CHECK(f1.residual_rms == Approx(f2.residual_rms).margin(1e-12));
}

TEST_CASE("unreached points are excluded and scarce data rejected", "[butterfly]") {
  std::vector<SpreadingPoint> pts{{2, 1.0, CrossingQuality::interpolated},
                                  {3, std::numeric_limits<double>::quiet_NaN(),
                                   CrossingQuality::not_reached},
                                  {4, 2.0, CrossingQuality::exact_sample}};
  auto fit = fit_velocity(pts);
  CHECK(fit.points == 2);
  CHECK(fit.slope == Approx(0.5).margin(1e-12));

  CHECK_THROWS(fit_velocity({{2, 1.0, CrossingQuality::interpolated}}));
  CHECK_THROWS(fit_velocity({{2, 1.0, CrossingQuality::interpolated},
                             {2, 1.5, CrossingQuality::interpolated}}));
}

TEST_CASE("anti ballistic data is flagged as non causal", "[butterfly]") {
  std::vector<SpreadingPoint> pts{{2, 2.0, CrossingQuality::interpolated},
                                  {3, 1.5, CrossingQuality::interpolated},
                                  {4, 1.0, CrossingQuality::interpolated}};
  auto fit = fit_velocity(pts);
  CHECK_FALSE(fit.causal);
  CHECK(std::isnan(fit.v_B));
}

TEST_CASE("default grids cover the documented ranges", "[butterfly]") {
  auto js = default_j_list(5);
  CHECK(js == std::vector<int>{2, 3, 4, 5});
  auto ts = default_t_grid();
  REQUIRE(ts.size() == 61);
  CHECK(ts.front() == 0.0);
  CHECK(ts.back() == Approx(3.0).margin(1e-12));
}

TEST_CASE("small chain pipeline produces a causal velocity", "[butterfly]") {
  ModelParams p{1.0, 0.0, 0.0, 3, Boundary::open};
  SpectralEvolution ev(build_xy_hamiltonian(p));
  PipelineOptions opts;
  opts.t_grid = default_t_grid(2.0, 0.05);
  auto res = run_pipeline(p, [&](double t) { return Evolution(ev.at(t)); }, opts);
  CHECK(res.warnings.empty());
  REQUIRE(res.spreading.size() == 2);
  CHECK(res.spreading[0].j == 2);
  CHECK(res.spreading[1].j == 3);
  CHECK(res.spreading[0].t_j <= res.spreading[1].t_j);
  CHECK(res.fit.causal);
  CHECK(res.fit.v_B > 0.5);
  CHECK(res.fit.v_B < 6.0);
  CHECK(res.analytic_vB == Approx(2.0).margin(1e-12));
}

TEST_CASE("short time grids surface unreached sites as warnings", "[butterfly]") {
  ModelParams p{1.0, 0.0, 0.0, 4, Boundary::open};
  SpectralEvolution ev(build_xy_hamiltonian(p));
  PipelineOptions opts;
  opts.t_grid = default_t_grid(1.0, 0.05);
  auto res = run_pipeline(p, [&](double t) { return Evolution(ev.at(t)); }, opts);
  bool mentions_j4 = false;
  for (const auto& w : res.warnings) mentions_j4 |= w.find("j=4") != std::string::npos;
  CHECK(mentions_j4);
  CHECK(res.fit.points == 2);
}

TEST_CASE("a frozen chain cannot support a velocity fit", "[butterfly]") {
  ModelParams p{1.0, 0.0, 0.0, 3, Boundary::open};
  Matrix id = Matrix::Identity(8, 8);
  PipelineOptions opts;
  opts.t_grid = {0.0, 0.5, 1.0};
  CHECK_THROWS(run_pipeline(p, [&](double) { return Evolution(id); }, opts));
}
