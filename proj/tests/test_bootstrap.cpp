#include <atomic>
#include <cmath>
#include <numeric>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"

using namespace fuzzeval;
using Catch::Approx;

namespace {

auto mean_stat(const std::vector<double>& v) {
  return [&v](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
    double s = 0;
    for (auto i : idx) s += v[i];
    return std::vector<double>{s / static_cast<double>(idx.size())};
  };
}

struct Line {
  Matrix x;
  std::vector<double> y;
};

Line noisy_line(std::size_t n, Rng& rng, bool hetero) {
  Line l{Matrix(n, 2, 1.0), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0, 10);
    l.x(i, 1) = x;
    l.y[i] = 1 + 2 * x + rng.normal(0, hetero ? 0.2 + 0.3 * x : 1.0);
  }
  return l;
}

}  // namespace

TEST_CASE("quantile follows the type 7 definition") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.25) == Approx(1.75));
}

TEST_CASE("mean CI width tracks the analytic standard error") {
  Rng rng(21);
  std::vector<double> v(400);
  for (auto& x : v) x = rng.normal(5, 2);
  BootstrapSpec b;
  b.replicates = 2000;
  b.seed = 9;
  auto t = pairs_bootstrap(v.size(), {"mean"}, mean_stat(v), b);
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / 400.0;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = std::sqrt(ss / 399.0 / 400.0);
  const double width = t.entries[0].ci_high - t.entries[0].ci_low;
  CHECK(t.entries[0].estimate == Approx(m));
  CHECK(width == Approx(2 * 1.96 * se).epsilon(0.12));
  CHECK(t.entries[0].significant);
}

TEST_CASE("constant statistic gives a degenerate interval") {
  BootstrapSpec b;
  b.replicates = 100;
  auto t = pairs_bootstrap(
      10, {"c"}, [](std::span<const std::size_t>) { return std::optional<std::vector<double>>(std::vector<double>{7.0}); }, b);
  CHECK(t.entries[0].ci_low == 7.0);
  CHECK(t.entries[0].ci_high == 7.0);
  CHECK(t.skipped == 0);
}

TEST_CASE("results do not depend on the thread count") {
  Rng rng(2);
  auto l = noisy_line(120, rng, true);
  for (auto method : {BootstrapMethod::Pairs, BootstrapMethod::Wild}) {
    std::vector<CiTable> out;
    for (unsigned th : {1u, 3u, 8u}) {
      BootstrapSpec b;
      b.replicates = 500;
      b.seed = 1234;
      b.threads = th;
      if (method == BootstrapMethod::Wild) {
        out.push_back(wild_bootstrap(l.x, l.y, {"a", "b"}, b));
      } else {
        out.push_back(pairs_bootstrap(
            l.y.size(), {"a", "b"},
            [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
              try {
                std::vector<double> ys;
                for (auto i : idx) ys.push_back(l.y[i]);
                return QrLeastSquares(l.x.select_rows(idx)).solve(ys);
              } catch (const ComputeError&) {
                return std::nullopt;
              }
            },
            b));
      }
    }
    for (std::size_t k = 1; k < out.size(); ++k)
      for (std::size_t e = 0; e < 2; ++e) {
        CHECK(out[k].entries[e].ci_low == out[0].entries[e].ci_low);
        CHECK(out[k].entries[e].ci_high == out[0].entries[e].ci_high);
      }
  }
}

TEST_CASE("same seed reproduces, different seeds differ") {
  Rng rng(5);
  auto l = noisy_line(60, rng, false);
  BootstrapSpec b;
  b.replicates = 300;
  b.seed = 1;
  auto a1 = wild_bootstrap(l.x, l.y, {"a", "b"}, b);
  auto a2 = wild_bootstrap(l.x, l.y, {"a", "b"}, b);
  b.seed = 2;
  auto c = wild_bootstrap(l.x, l.y, {"a", "b"}, b);
  CHECK(a1.entries[1].ci_low == a2.entries[1].ci_low);
  CHECK(a1.entries[1].ci_low != c.entries[1].ci_low);
}

TEST_CASE("wild weights have mean 0 and variance 1") {
  for (auto w : {WildWeights::Rademacher, WildWeights::Mammen}) {
    Rng rng(31);
    double s = 0, s2 = 0, s3 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double v = wild_weight(rng, w);
      s += v;
      s2 += v * v;
      s3 += v * v * v;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(s2 / n == Approx(1.0).epsilon(0.02));
    // Mammen weights also have third moment 1
    if (w == WildWeights::Mammen) CHECK(s3 / n == Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("slope CI covers the true slope about 95% of the time") {
  for (bool hetero : {false, true}) {
    for (auto method : {BootstrapMethod::Pairs, BootstrapMethod::Wild}) {
      Rng rng(hetero ? 100 : 200);
      int covered = 0;
      const int sims = 200;
      for (int s = 0; s < sims; ++s) {
        auto l = noisy_line(200, rng, hetero);
        BootstrapSpec b;
        b.replicates = 400;
        b.seed = static_cast<std::uint64_t>(s) + 1;
        b.method = method;
        CiTable t;
        if (method == BootstrapMethod::Wild) {
          t = wild_bootstrap(l.x, l.y, {"a", "b"}, b);
        } else {
          t = pairs_bootstrap(
              200, {"a", "b"},
              [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
                std::vector<double> ys;
                for (auto i : idx) ys.push_back(l.y[i]);
                return QrLeastSquares(l.x.select_rows(idx)).solve(ys);
              },
              b);
        }
        if (t.entries[1].ci_low <= 2.0 && 2.0 <= t.entries[1].ci_high) ++covered;
      }
      INFO("hetero=" << hetero << " method=" << to_string(method) << " covered=" << covered);
      CHECK(covered >= 176);
      CHECK(covered <= 198);
    }
  }
}

TEST_CASE("cluster wild bootstrap shares one weight per cluster") {
  // intercept only, two clusters, Rademacher weights: every replicate mean is
  // ybar + (+-S1 +- S2) / n, so the percentile interval is ybar -+ (|S1| + |S2|) / n
  const std::vector<double> y{3, 1, 4, 1, 5, 9, 2, 6};
  const std::vector<std::size_t> cl{7, 7, 7, 2, 2, 2, 2, 7};
  const double n = 8;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double s7 = 0, s2 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) (cl[i] == 7 ? s7 : s2) += (y[i] - ybar) / std::sqrt(1 - 1 / n);
  BootstrapSpec spec;
  spec.replicates = 400;
  spec.seed = 8;
  const Matrix x(8, 1, 1.0);
  auto t = wild_bootstrap(x, y, {"mean"}, spec, cl);
  CHECK(t.entries[0].ci_low == Approx(ybar - (std::abs(s7) + std::abs(s2)) / n).epsilon(1e-12));
  CHECK(t.entries[0].ci_high == Approx(ybar + (std::abs(s7) + std::abs(s2)) / n).epsilon(1e-12));

  // singleton clusters are the unclustered scheme; cluster off ignores labels
  std::vector<std::size_t> ids(8);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  auto plain = wild_bootstrap(x, y, {"mean"}, spec);
  CHECK(wild_bootstrap(x, y, {"mean"}, spec, ids).entries[0].ci_low == plain.entries[0].ci_low);
  spec.cluster = false;
  CHECK(wild_bootstrap(x, y, {"mean"}, spec, cl).entries[0].ci_low == plain.entries[0].ci_low);

  spec.cluster = true;
  auto short_cl = cl;
  short_cl.pop_back();
  CHECK_THROWS_AS(wild_bootstrap(x, y, {"mean"}, spec, short_cl), ComputeError);
}

TEST_CASE("leverage equals the hat matrix diagonal") {
  Rng rng(12);
  Matrix x(30, 4, 1.0);
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 1; c < 4; ++c) x(r, c) = rng.normal(0, 1 + c);
  // H = X (X'X)^-1 X' via Gauss-Jordan on X'X
  const std::size_t p = 4;
  std::vector<std::vector<double>> a(p, std::vector<double>(2 * p, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t r = 0; r < 30; ++r) a[i][j] += x(r, i) * x(r, j);
    a[i][p + i] = 1;
  }
  for (std::size_t i = 0; i < p; ++i) {
    const double d = a[i][i];
    for (auto& v : a[i]) v /= d;
    for (std::size_t k = 0; k < p; ++k)
      if (k != i) {
        const double f = a[k][i];
        for (std::size_t j = 0; j < 2 * p; ++j) a[k][j] -= f * a[i][j];
      }
  }
  auto h = QrLeastSquares(x).leverage();
  double total = 0;
  for (std::size_t r = 0; r < 30; ++r) {
    double want = 0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) want += x(r, i) * a[i][p + j] * x(r, j);
    CHECK(h[r] == Approx(want).epsilon(1e-10));
    total += h[r];
  }
  CHECK(total == Approx(4.0).epsilon(1e-12));
}

TEST_CASE("clustered model intervals do not depend on the thread count") {
  const auto d = fixture_dataset();
  const auto ds = default_design_spec(d, "libfuzzer");
  for (auto method : {BootstrapMethod::Wild, BootstrapMethod::Pairs}) {
    BootstrapSpec b;
    b.replicates = 100;
    b.seed = 4;
    b.method = method;
    auto one = fit_explainable_model(d, ds, b);
    b.threads = 3;
    auto three = fit_explainable_model(d, ds, b);
    for (std::size_t k = 0; k < one.ci.entries.size(); ++k) {
      CHECK(one.ci.entries[k].ci_low == three.ci.entries[k].ci_low);
      CHECK(one.ci.entries[k].ci_high == three.ci.entries[k].ci_high);
    }
  }
}

TEST_CASE("perfect fit gives zero-width intervals") {
  Matrix x(20, 2, 1.0);
  std::vector<double> y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x(i, 1) = static_cast<double>(i);
    y[i] = 3 - 0.5 * static_cast<double>(i);
  }
  BootstrapSpec b;
  b.replicates = 200;
  auto t = wild_bootstrap(x, y, {"a", "b"}, b);
  CHECK(t.entries[1].ci_high - t.entries[1].ci_low < 1e-9);
  CHECK(t.entries[1].estimate == Approx(-0.5));
}

TEST_CASE("undefined replicates are retried and excessive failure is an error") {
  BootstrapSpec b;
  b.replicates = 200;
  std::atomic<int> calls{0};
  // the original sample succeeds, then roughly half the replicates fail
  auto t = pairs_bootstrap(
      20, {"m"},
      [&](std::span<const std::size_t> idx) -> std::optional<std::vector<double>> {
        if (calls++ > 0 && idx[0] % 2 == 0) return std::nullopt;
        return std::vector<double>{1.0};
      },
      b);
  CHECK(t.replicates == 200);
  CHECK(t.skipped <= 2);

  auto never = [n = 0](std::span<const std::size_t>) mutable -> std::optional<std::vector<double>> {
    if (n++ == 0) return std::vector<double>{1.0};
    return std::nullopt;
  };
  b.threads = 1;
  CHECK_THROWS_AS(pairs_bootstrap(20, {"m"}, never, b), ComputeError);
}

TEST_CASE("invalid specs are rejected") {
  BootstrapSpec b;
  b.ci_level = 1.0;
  CHECK_THROWS(pairs_bootstrap(10, {"m"}, [](std::span<const std::size_t>) {
    return std::optional<std::vector<double>>(std::vector<double>{0.0});
  }, b));
  b.ci_level = 0.95;
  b.replicates = 0;
  CHECK_THROWS(pairs_bootstrap(10, {"m"}, [](std::span<const std::size_t>) {
    return std::optional<std::vector<double>>(std::vector<double>{0.0});
  }, b));
}
