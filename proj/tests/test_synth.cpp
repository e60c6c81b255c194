#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"

using namespace fuzzeval;
using Catch::Approx;

namespace {

SynthSpec small_spec(SynthMode mode, double noise) {
  SynthSpec s;
  s.programs = 5;
  s.trials_per_program = 10;
  s.mode = mode;
  s.noise_sd = noise;
  s.seed = 99;
  s.fuzzers = {{"a", 0.0, {{keys::init_coverage, 0.02}}},
               {"b", 0.5, {{keys::init_coverage, -0.01}}},
               {"c", -0.5, {{keys::program_text_bytes, 0.05}}}};
  return s;
}

}  // namespace

TEST_CASE("fixture has the expected shape and validates") {
  auto res = fixture_result();
  const auto& d = res.dataset;
  CHECK(d.size() == 1056);
  CHECK(d.programs().size() == 11);
  CHECK(d.fuzzers() == std::vector<std::string>{"libfuzzer", "afl", "aflplusplus", "entropic"});
  CHECK(validate_dataset(d).empty());
  CHECK(res.truth.reference_fuzzer == "libfuzzer");
  CHECK(res.truth.mlr.size() == 20);
  CHECK(res.truth.mlr.at("prop:mean_seed_bytes") == 0.0);
}

TEST_CASE("bundled fixture file equals the generator output") {
  auto loaded = load_dataset(testutil::data_path("fixture.csv"));
  CHECK(to_csv_string(loaded) == to_csv_string(fixture_dataset()));
}

TEST_CASE("generation is deterministic per seed") {
  auto s = small_spec(SynthMode::LatentLinear, 1.0);
  CHECK(to_csv_string(generate(s).dataset) == to_csv_string(generate(s).dataset));
  auto t = s;
  t.seed = 100;
  CHECK(to_csv_string(generate(s).dataset) != to_csv_string(generate(t).dataset));
}

TEST_CASE("noise-free latent mode reproduces the base order") {
  SynthSpec s;
  s.programs = 4;
  s.trials_per_program = 6;
  s.mode = SynthMode::LatentLinear;
  s.noise_sd = 0.0;
  s.fuzzers = {{"slow", -2.0, {}}, {"mid", 0.0, {}}, {"fast", 3.0, {}}};
  auto d = generate(s).dataset;
  auto rd = rank_dataset(d, std::vector<PropertyKey>{}, RankScope::WithinProgram);
  for (std::size_t r = 0; r < rd.rows(); ++r) {
    const auto& f = d.trials()[r].fuzzer;
    CHECK(rd.fuzzer_rank()[r] == (f == "slow" ? 1.0 : f == "mid" ? 2.0 : 3.0));
  }
}

TEST_CASE("monotone and linear latent modes give identical ranks") {
  auto lin = generate(small_spec(SynthMode::LatentLinear, 1.0)).dataset;
  auto mono = generate(small_spec(SynthMode::LatentMonotone, 1.0)).dataset;
  auto r1 = rank_dataset(lin, std::vector<PropertyKey>{}, RankScope::WithinProgram);
  auto r2 = rank_dataset(mono, std::vector<PropertyKey>{}, RankScope::WithinProgram);
  CHECK(r1.fuzzer_rank() == r2.fuzzer_rank());
  bool differs = false;
  for (std::size_t i = 0; i < lin.size(); ++i) differs |= lin.trials()[i].performance != mono.trials()[i].performance;
  CHECK(differs);
}

TEST_CASE("permutohedron membership") {
  CHECK(detail::in_permutohedron({1, 2, 3}));
  CHECK(detail::in_permutohedron({2, 2, 2}));
  CHECK(detail::in_permutohedron({1.5, 1.5, 3}));
  CHECK(!detail::in_permutohedron({0.5, 2.5, 3}));
  CHECK(!detail::in_permutohedron({1, 2, 4}));
}

TEST_CASE("permutation sampler has the requested mean") {
  const std::vector<double> mu{1.2, 2.9, 2.1, 3.8};
  Rng rng(5);
  std::vector<double> sum(4, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto r = detail::sample_permutation_with_mean(mu, rng);
    std::multiset<double> got(r.begin(), r.end());
    REQUIRE(got == std::multiset<double>{1, 2, 3, 4});
    for (std::size_t k = 0; k < 4; ++k) sum[k] += r[k];
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(sum[k] / n == Approx(mu[k]).margin(0.015));
}

TEST_CASE("infeasible expected ranks are reported") {
  SynthSpec s;
  s.programs = 2;
  s.trials_per_program = 3;
  s.fuzzers = {{"a", 5.0, {}}, {"b", 0.0, {}}};
  CHECK_THROWS_AS(generate(s), ComputeError);
}

TEST_CASE("invalid specs are rejected") {
  auto s = small_spec(SynthMode::ExpectedRank, 1.0);
  s.reference_fuzzer = "zzz";
  CHECK_THROWS_AS(generate(s), Error);
  s = small_spec(SynthMode::ExpectedRank, 1.0);
  s.fuzzers[0].sensitivity["bogus"] = 1.0;
  CHECK_THROWS_AS(generate(s), Error);
  s = small_spec(SynthMode::LatentLinear, -1.0);
  CHECK_THROWS_AS(generate(s), Error);
  CHECK_THROWS_AS(parse_synth_mode("gaussian"), Error);
}

TEST_CASE("ground truth follows the centered coefficients") {
  auto s = small_spec(SynthMode::ExpectedRank, 0.0);
  auto t = generate(s).truth;
  // bases are already centered; coverage sensitivities .02, -.01, 0 have mean .01 / 3
  CHECK(t.mlr.at("intercept") == Approx(2.0));
  CHECK(t.mlr.at("fuzzer:b") == Approx(0.5));
  CHECK(t.mlr.at("prop:init_coverage") == Approx(0.02 - 0.01 / 3));
  CHECK(t.mlr.at("inter:init_coverage:b") == Approx(-0.03));
  CHECK(t.slopes.at("c|init_coverage") == Approx(-0.01 / 3));
  CHECK(t.slopes.at("c|program_text_bytes") == Approx(0.05 - 0.05 / 3));
}

TEST_CASE("expected ranks are recovered by the explainable model") {
  SynthSpec s;
  s.programs = 60;
  s.trials_per_program = 30;
  s.seed = 3;
  s.fuzzers = {{"a", 0.0, {{keys::init_coverage, 0.01}}},
               {"b", 0.3, {{keys::init_coverage, -0.005}}},
               {"c", -0.3, {{keys::program_text_bytes, 0.02}}}};
  auto res = generate(s);
  BootstrapSpec b;
  b.replicates = 400;
  auto m = fit_explainable_model(res.dataset, default_design_spec(res.dataset, "a"), b);
  // within two CI half-widths, about four standard errors
  for (const auto& e : m.ci.entries) {
    if (!res.truth.mlr.count(e.term)) continue;
    INFO(e.term);
    CHECK(std::abs(e.estimate - res.truth.mlr.at(e.term)) <= e.ci_high - e.ci_low);
  }
}

TEST_CASE("spec JSON round trip") {
  auto j = nlohmann::json::parse(R"({"programs": 3, "trials_per_program": 4, "mode": "latent-linear",
      "fuzzers": [{"id": "x", "base": 1, "sensitivity": {"init_coverage": 0.1}}, {"id": "y"}],
      "property_model": {"pool_min": 10, "pool_max": 20}})");
  auto s = synth_spec_from_json(j);
  CHECK(s.programs == 3);
  CHECK(s.mode == SynthMode::LatentLinear);
  CHECK(s.fuzzers.size() == 2);
  CHECK(s.property_model.pool_max == 20);
  CHECK(generate(s).dataset.size() == 24);
  CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json::parse(R"({"programs": 3})")), DataError);
}
