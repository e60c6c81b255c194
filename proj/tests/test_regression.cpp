#include <algorithm>
#include <cmath>
#include <set>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"

using namespace fuzzeval;
using Catch::Approx;

namespace {

BootstrapSpec quick_boot(std::size_t reps = 200, std::uint64_t seed = 5) {
  BootstrapSpec b;
  b.replicates = reps;
  b.seed = seed;
  return b;
}

const Dataset& fixture() {
  static const Dataset d = fixture_dataset();
  return d;
}

}  // namespace

TEST_CASE("default design has 20 columns for 4 fuzzers and 4 properties") {
  const auto& d = fixture();
  auto spec = default_design_spec(d);
  CHECK(spec.reference_fuzzer == "libfuzzer");
  REQUIRE(spec.properties.size() == 4);
  CHECK(spec.properties[3].key == keys::program_text_bytes);
  CHECK(spec.properties[3].reference_level == Approx(6.0));
  auto rd = rank_dataset(d, rank_requests(spec));
  auto design = build_design_matrix(rd, spec);
  CHECK(design.x.cols() == 20);
  CHECK(design.x.rows() == 1056);
  std::set<std::string> labels(design.labels.begin(), design.labels.end());
  CHECK(labels.size() == 20);
  CHECK(labels.count("intercept"));
  CHECK(labels.count("fuzzer:afl"));
  CHECK(!labels.count("fuzzer:libfuzzer"));
  CHECK(labels.count("inter:init_coverage:entropic"));
}

TEST_CASE("fuzzer dummies and interactions are coded per row") {
  const auto& d = fixture();
  auto spec = default_design_spec(d);
  auto rd = rank_dataset(d, rank_requests(spec));
  auto design = build_design_matrix(rd, spec);
  auto col = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(design.labels.begin(), design.labels.end(), l) - design.labels.begin());
  };
  const auto& cov = rd.property_rank(keys::init_coverage, RankScope::WithinProgram);
  for (std::size_t i = 0; i < design.rows.size(); ++i) {
    const auto r = design.rows[i];
    const auto& f = d.trials()[r].fuzzer;
    CHECK(design.x(i, col("intercept")) == 1.0);
    CHECK(design.x(i, col("fuzzer:afl")) == (f == "afl" ? 1.0 : 0.0));
    CHECK(design.x(i, col("prop:init_coverage")) == cov[r] - 1.0);
    CHECK(design.x(i, col("inter:init_coverage:entropic")) == (f == "entropic" ? cov[r] - 1.0 : 0.0));
    CHECK(design.y[i] == rd.fuzzer_rank()[r]);
  }
}

TEST_CASE("unknown reference fuzzer is rejected") {
  auto spec = default_design_spec(fixture());
  spec.reference_fuzzer = "honggfuzz";
  auto rd = rank_dataset(fixture(), rank_requests(spec));
  CHECK_THROWS_AS(build_design_matrix(rd, spec), DataError);
}

TEST_CASE("constant response gives r2 of zero") {
  Matrix x(8, 2, 1.0);
  for (std::size_t i = 0; i < 8; ++i) x(i, 1) = static_cast<double>(i);
  std::vector<double> y(8, 3.0);
  auto fit = ols_fit(x, y);
  CHECK(fit.r2 == 0.0);
  CHECK(fit.coefficients[0] == Approx(3.0));
  CHECK(std::abs(fit.coefficients[1]) < 1e-12);
  CHECK(fit.f_p_value == 1.0);
}

TEST_CASE("r2 stays in [0, 1] and matches 1 - SSres/SStot") {
  Rng rng(11);
  Matrix x(30, 3, 1.0);
  std::vector<double> y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    x(i, 1) = rng.normal();
    x(i, 2) = rng.normal();
    y[i] = 0.5 * x(i, 1) + rng.normal();
  }
  auto fit = ols_fit(x, y);
  double mean = 0, ss_res = 0, ss_tot = 0;
  for (double v : y) mean += v / 30.0;
  for (std::size_t i = 0; i < 30; ++i) {
    ss_res += fit.residuals[i] * fit.residuals[i];
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  CHECK(fit.r2 == Approx(1 - ss_res / ss_tot));
  CHECK(fit.r2 >= 0.0);
  CHECK(fit.r2 <= 1.0);
  CHECK(fit.sigma == Approx(std::sqrt(ss_res / 27.0)));
}

TEST_CASE("fit is invariant to row order") {
  const auto& d = fixture();
  auto trials = d.trials();
  std::reverse(trials.begin(), trials.end());
  Rng rng(4);
  for (std::size_t i = trials.size() - 1; i > 0; --i) std::swap(trials[i], trials[rng.below(i + 1)]);
  Dataset shuffled(trials);
  auto spec = default_design_spec(d);
  auto boot = quick_boot(100);
  auto a = fit_explainable_model(d, spec, boot);
  auto b = fit_explainable_model(shuffled, spec, boot);
  REQUIRE(a.fit.labels == b.fit.labels);
  for (std::size_t i = 0; i < a.fit.coefficients.size(); ++i)
    CHECK(a.fit.coefficients[i] == Approx(b.fit.coefficients[i]).margin(1e-9));
  CHECK(a.fit.r2 == Approx(b.fit.r2));
}

TEST_CASE("predictions follow the closed form and crossover solves equality") {
  const auto& d = fixture();
  auto spec = default_design_spec(d);
  auto m = fit_explainable_model(d, spec, quick_boot(100));
  const auto& f = m.fit;

  CHECK(predict_rank(m, "libfuzzer") == Approx(f.intercept));
  CHECK(predict_rank(m, "afl") == Approx(f.intercept + f.gamma.at("afl")));

  const std::map<PropertyKey, double> at{{keys::init_coverage, 3.0}, {keys::program_text_bytes, 9.0}};
  const double want = f.coefficient("intercept") + f.coefficient("fuzzer:entropic") +
                      (f.coefficient("prop:init_coverage") + f.coefficient("inter:init_coverage:entropic")) * 2.0 +
                      (f.coefficient("prop:program_text_bytes") + f.coefficient("inter:program_text_bytes:entropic")) * 3.0;
  CHECK(predict_rank(m, "entropic", at) == Approx(want));

  // closed form along program size with everything else at reference
  const double s_lf = f.beta.at(keys::program_text_bytes);
  const double s_ap = s_lf + f.omega.at({keys::program_text_bytes, "aflplusplus"});
  const double a_lf = f.intercept, a_ap = f.intercept + f.gamma.at("aflplusplus");
  auto c = crossover(m, "libfuzzer", "aflplusplus", keys::program_text_bytes);
  REQUIRE(c.delta.has_value());
  CHECK(*c.delta == Approx((a_lf - a_ap) / (s_ap - s_lf)));
  CHECK(c.challenger_ahead_above == (s_ap > s_lf));
  const std::map<PropertyKey, double> cross{{keys::program_text_bytes, 6.0 + *c.delta}};
  CHECK(predict_rank(m, "libfuzzer", cross) == Approx(predict_rank(m, "aflplusplus", cross)));

  CHECK_THROWS_AS(predict_rank(m, "honggfuzz"), Error);
  CHECK_THROWS_AS(predict_rank(m, "afl", {{"no_such", 1.0}}), Error);
}

TEST_CASE("single fuzzer without interactions equals plain multiple regression") {
  std::vector<TrialRecord> rows;
  for (const auto& t : fixture().trials())
    if (t.fuzzer == "afl") rows.push_back(t);
  Dataset d(rows);
  auto spec = default_design_spec(d);
  spec.include_interactions = false;
  auto m = fit_explainable_model(d, spec, quick_boot(100));
  auto rd = rank_dataset(d, rank_requests(spec));
  Matrix x(rd.rows(), 1 + spec.properties.size(), 1.0);
  std::vector<double> y(rd.rows());
  for (std::size_t r = 0; r < rd.rows(); ++r) {
    for (std::size_t p = 0; p < spec.properties.size(); ++p)
      x(r, p + 1) = rd.property_rank(spec.properties[p].key, spec.properties[p].scope)[r] -
                    spec.properties[p].reference_level;
    y[r] = rd.fuzzer_rank()[r];
  }
  auto direct = ols_fit(x, y);
  REQUIRE(direct.coefficients.size() == m.fit.coefficients.size());
  for (std::size_t i = 0; i < direct.coefficients.size(); ++i)
    CHECK(direct.coefficients[i] == Approx(m.fit.coefficients[i]).margin(1e-12));
  CHECK(m.fit.r2 == 0.0);
}

TEST_CASE("per-fuzzer slopes recover a known linear relation") {
  // Two fuzzers; b beats a exactly when the property rank is above 5.
  std::vector<TrialRecord> rows;
  for (int p = 0; p < 10; ++p) {
    const std::string prog = "p" + std::to_string(p);
    for (std::uint32_t t = 0; t < 10; ++t) {
      const double x = static_cast<double>(t);
      const bool b_wins = t >= 5;
      rows.push_back(testutil::rec(prog, "a", t, b_wins ? 1 : 2, {{"x", x}}));
      rows.push_back(testutil::rec(prog, "b", t, b_wins ? 2 : 1, {{"x", x}}));
    }
  }
  Dataset d(rows);
  auto rd = rank_dataset(d, std::vector<PropertyKey>{"x"}, RankScope::WithinProgram);
  auto boot = quick_boot(300);
  boot.method = BootstrapMethod::Pairs;
  auto est = per_fuzzer_slopes(rd, "x", RankScope::WithinProgram, boot);
  REQUIRE(est.size() == 2);
  // each fuzzer-trial group shares one x value across the two fuzzers, so rank 1..10
  // comes in pairs (1.5, 3.5, ...) and the oracle is the simple OLS on a step function.
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < rd.rows(); ++r)
    if (d.trials()[r].fuzzer == "b") {
      xs.push_back(rd.property_rank("x", RankScope::WithinProgram)[r]);
      ys.push_back(rd.fuzzer_rank()[r]);
    }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / static_cast<double>(xs.size());
    my += ys[i] / static_cast<double>(xs.size());
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  CHECK(est[1].fuzzer == "b");
  CHECK(est[1].slope == Approx(sxy / sxx));
  CHECK(est[1].slope > 0);
  CHECK(est[1].significant);
  CHECK(est[0].slope == Approx(-est[1].slope));
  CHECK(est[1].observations == 100);
}

TEST_CASE("fuzzer with constant rank has a flat, insignificant slope") {
  std::vector<TrialRecord> rows;
  Rng rng(8);
  for (int p = 0; p < 4; ++p)
    for (std::uint32_t t = 0; t < 8; ++t) {
      const std::string prog = "p" + std::to_string(p);
      const double x = rng.uniform();
      rows.push_back(testutil::rec(prog, "lo", t, 1, {{"x", x}}));
      rows.push_back(testutil::rec(prog, "hi", t, 10, {{"x", x}}));
    }
  Dataset d(rows);
  auto rd = rank_dataset(d, std::vector<PropertyKey>{"x"}, RankScope::WithinProgram);
  auto boot = quick_boot(200);
  boot.method = BootstrapMethod::Pairs;
  for (const auto& e : per_fuzzer_slopes(rd, "x", RankScope::WithinProgram, boot)) {
    CHECK(std::abs(e.slope) < 1e-12);
    CHECK(e.ci_low <= 0.0);
    CHECK(e.ci_high >= 0.0);
    CHECK(!e.significant);
  }
}

TEST_CASE("per-benchmark design drops program-level predictors and fits at least as well") {
  const auto& d = fixture();
  auto spec = default_design_spec(d);
  auto pooled = fit_explainable_model(d, spec, quick_boot(100));
  spec.per_benchmark = true;
  auto rd = rank_dataset(d, rank_requests(spec));
  auto design = build_design_matrix(rd, spec);
  CHECK(design.x.cols() == 11 * 16);
  for (const auto& l : design.labels) CHECK(l.find("program_text_bytes") == std::string::npos);
  auto fit = ols_fit(design.x, design.y, design.labels);
  CHECK(fit.r2 >= pooled.fit.r2);
  CHECK_THROWS_AS(predict_rank(fit_explainable_model(rd, spec, quick_boot(100)), "afl"), Error);
}

TEST_CASE("MLR recovers ground truth of the synthetic fixture in sign") {
  auto res = fixture_result();
  auto m = fit_explainable_model(res.dataset, default_design_spec(res.dataset), quick_boot(100));
  for (const auto& [term, truth] : res.truth.mlr) {
    if (truth == 0.0) continue;
    INFO(term);
    CHECK((m.fit.coefficient(term) > 0) == (truth > 0));
  }
}
