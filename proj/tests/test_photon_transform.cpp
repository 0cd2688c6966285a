#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "molmap/photon_transform.hpp"

using namespace molmap;

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Exhaustive oracle: distribute j labelled photons over md detectors (md^j
// equally likely assignments) and count how many hit exactly i distinct ones.
double weight_oracle(int md, int i, int j) {
  if (j == 0) return i == 0 ? 1.0 : 0.0;
  long long total = 1;
  for (int a = 0; a < j; ++a) total *= md;
  long long hits = 0;
  std::vector<int> assign(j, 0);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    unsigned mask = 0;
    for (int a = 0; a < j; ++a) {
      mask |= 1u << (c % md);
      c /= md;
    }
    if (__builtin_popcount(mask) == i) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

// Independent detector-distribution oracle: dynamic program over occupied
// detector subsets, adding one emitter at a time.
std::vector<double> subset_dp_oracle(const std::vector<double>& eps, int md) {
  std::vector<double> state(1u << md, 0.0);
  state[0] = 1.0;
  for (double e : eps) {
    std::vector<double> next(1u << md, 0.0);
    for (unsigned s = 0; s < state.size(); ++s) {
      if (state[s] == 0.0) continue;
      next[s] += state[s] * (1.0 - e);
      for (int u = 0; u < md; ++u) next[s | (1u << u)] += state[s] * e / md;
    }
    state.swap(next);
  }
  std::vector<double> D(md + 1, 0.0);
  for (unsigned s = 0; s < state.size(); ++s) D[__builtin_popcount(s)] += state[s];
  return D;
}

}  // namespace

TEST_CASE("Stirling numbers of the second kind") {
  CHECK(stirling2(0, 0) == 1.0);
  CHECK(stirling2(1, 0) == 0.0);
  CHECK(stirling2(4, 2) == 7.0);
  CHECK(stirling2(5, 3) == 25.0);
  CHECK(stirling2(6, 3) == 90.0);
  for (int j = 1; j <= 10; ++j) {
    CHECK(stirling2(j, 1) == 1.0);
    CHECK(stirling2(j, j) == 1.0);
  }
  CHECK(stirling2(3, 5) == 0.0);
  CHECK_THROWS(stirling2(-1, 0));
}

TEST_CASE("detector weights: known values and column sums") {
  auto w = detector_weights(4, 12);
  CHECK(w.at(1, 2) == 0.25);  // both photons on one of four detectors
  CHECK(w.at(2, 2) == 0.75);
  for (int j = 0; j <= 12; ++j) {
    double sum = 0.0;
    for (int i = 0; i <= 4; ++i) sum += w.at(i, j);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("detector weights match the Stirling closed form") {
  for (int md : {2, 4, 6, 8}) {
    auto w = detector_weights(md, 12);
    for (int j = 0; j <= 12; ++j) {
      double mdj = std::pow(static_cast<double>(md), j);
      for (int i = 0; i <= md; ++i) {
        double expect = stirling2(j, i) * factorial(md) / (factorial(md - i) * mdj);
        CHECK(w.at(i, j) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("detector weights match exhaustive assignment enumeration") {
  for (int md : {2, 3, 4}) {
    auto w = detector_weights(md, 6);
    for (int j = 0; j <= 6; ++j)
      for (int i = 0; i <= md; ++i)
        CHECK(w.at(i, j) == doctest::Approx(weight_oracle(md, i, j)).epsilon(1e-12));
  }
}

TEST_CASE("Poisson binomial: enumeration and edge cases") {
  std::vector<double> eps{0.1, 0.25, 0.4, 0.05};
  auto q = poisson_binomial(eps);
  REQUIRE(q.size() == 5);
  // brute force over the 2^4 emission patterns
  std::vector<double> expect(5, 0.0);
  for (unsigned m = 0; m < 16; ++m) {
    double pr = 1.0;
    int k = 0;
    for (int j = 0; j < 4; ++j) {
      if (m & (1u << j)) {
        pr *= eps[j];
        ++k;
      } else {
        pr *= 1.0 - eps[j];
      }
    }
    expect[k] += pr;
  }
  for (int k = 0; k <= 4; ++k) CHECK(q[k] == doctest::Approx(expect[k]).epsilon(1e-14));

  CHECK(poisson_binomial(std::vector<double>{}) == std::vector<double>{1.0});
  CHECK_THROWS(poisson_binomial(std::vector<double>{0.5, 1.0}));
  CHECK_THROWS(poisson_binomial(std::vector<double>{-0.1}));
}

TEST_CASE("iterated sums: closed forms and round trip") {
  // S_1 = s_1, S_2 = s_1^2 - s_2
  std::vector<double> s{0.3, 0.05};
  auto S = iterated_sums(s, 2);
  CHECK(S[0] == doctest::Approx(0.3));
  CHECK(S[1] == doctest::Approx(0.3 * 0.3 - 0.05).epsilon(1e-14));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.01, 0.4);
  for (int rep = 0; rep < 200; ++rep) {
    int kmax = 1 + static_cast<int>(rng() % 8);
    std::vector<double> sv(kmax);
    double s1 = unif(rng);
    for (int k = 0; k < kmax; ++k) sv[k] = std::pow(s1, k + 1);  // one-emitter shape
    auto Sv = iterated_sums(sv, kmax);
    auto back = power_sums_from_iterated(Sv, kmax);
    for (int k = 0; k < kmax; ++k) CHECK(back[k] == doctest::Approx(sv[k]).epsilon(1e-10));
  }
  CHECK_THROWS(power_sums_from_iterated(std::vector<double>{-0.2, 0.1}, 2));
}

TEST_CASE("forward transform agrees with the exact distribution when N <= md") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.01, 0.45);
  for (int md : {2, 4, 6}) {
    for (int rep = 0; rep < 50; ++rep) {
      int n_mol = 1 + static_cast<int>(rng() % md);
      std::vector<double> eps(n_mol);
      for (auto& e : eps) e = unif(rng);
      std::vector<double> s(md, 0.0);
      for (int k = 1; k <= md; ++k)
        for (double e : eps) s[k - 1] += std::pow(e, k);
      auto D = forward_transform(s, md);
      auto exact = exact_detector_distribution(eps, md);
      REQUIRE(D.size() == exact.size());
      for (std::size_t k = 0; k < D.size(); ++k)
        CHECK(D[k] == doctest::Approx(exact[k]).epsilon(1e-10));
    }
  }
}

TEST_CASE("exact detector distribution matches the subset DP oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.005, 0.45);
  for (int md : {2, 3, 4, 6}) {
    for (int rep = 0; rep < 30; ++rep) {
      int n_mol = 1 + static_cast<int>(rng() % 9);
      std::vector<double> eps(n_mol);
      for (auto& e : eps) e = unif(rng);
      auto got = exact_detector_distribution(eps, md);
      auto want = subset_dp_oracle(eps, md);
      double sum = 0.0;
      for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-11));
        sum += got[k];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("inverse transform: round trip and degenerate input") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> unif(0.01, 0.45);
  for (int md : {2, 4, 6, 8}) {
    for (int rep = 0; rep < 100; ++rep) {
      int n_mol = 1 + static_cast<int>(rng() % md);
      std::vector<double> eps(n_mol);
      for (auto& e : eps) e = unif(rng);
      std::vector<double> s(md, 0.0);
      for (int k = 1; k <= md; ++k)
        for (double e : eps) s[k - 1] += std::pow(e, k);
      auto inv = inverse_transform(forward_transform(s, md));
      REQUIRE_FALSE(inv.degenerate);
      for (int k = 0; k < md; ++k) CHECK(inv.s[k] == doctest::Approx(s[k]).epsilon(1e-9));
    }
  }

  std::vector<double> dark{1.0, 0.0, 0.0, 0.0, 0.0};
  auto inv = inverse_transform(dark);
  CHECK(inv.degenerate);
  for (double v : inv.s) CHECK(v == 0.0);
}

TEST_CASE("gamma diagnostic") {
  CHECK(gamma_diagnostic(std::vector<double>{0.1, 0.3, 0.2}) == 0.3);
  CHECK(gamma_diagnostic(std::vector<double>{}) == 0.0);
}
