#include <set>

#include "catch_amalgamated.hpp"
#include "fuzzeval/random.hpp"

using namespace fuzzeval;

TEST_CASE("derived seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(7, i));
  CHECK(seen.size() == 10000);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("same seed, same stream") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("uniform and below stay in range") {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.below(7) < 7);
  }
  CHECK(r.below(1) == 0);
}

TEST_CASE("below is close to uniform") {
  Rng r(5);
  std::vector<int> counts(6, 0);
  const int n = 120000;
  for (int i = 0; i < n; ++i) ++counts[r.below(6)];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
  CHECK(chi2 < 20.5);  // 5 df, p ~ 0.001
}

TEST_CASE("normal and exponential moments") {
  Rng r(11);
  const int n = 200000;
  double s = 0, ss = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    ss += z * z;
    e += r.exponential(3.0);
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.02);
  CHECK(std::abs(e / n - 3.0) < 0.03);
}
