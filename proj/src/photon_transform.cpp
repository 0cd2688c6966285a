#include "molmap/photon_transform.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace molmap {

namespace {

double factorial(int k) {
  static const auto table = [] {
    std::array<double, 171> t{};
    t[0] = 1.0;
    for (int i = 1; i < 171; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  return table[static_cast<std::size_t>(k)];
}

constexpr int kStirlingCache = 20;

}  // namespace

double stirling2(int j, int i) {
  if (j < 0 || i < 0) throw std::invalid_argument("stirling2: negative input");
  if (i > j) return 0.0;
  if (j == 0) return 1.0;  // S(0,0)
  if (i == 0) return 0.0;

  static std::array<std::array<double, kStirlingCache + 1>, kStirlingCache + 1> cache;
  static std::once_flag once;
  std::call_once(once, [] {
    cache[0][0] = 1.0;
    for (int jj = 1; jj <= kStirlingCache; ++jj)
      for (int ii = 1; ii <= jj; ++ii)
        cache[jj][ii] = ii * cache[jj - 1][ii] + cache[jj - 1][ii - 1];
  });
  if (j <= kStirlingCache) return cache[j][i];

  // Rarely needed; plain recurrence row by row.
  std::vector<double> prev(j + 1, 0.0), cur(j + 1, 0.0);
  prev[0] = 1.0;
  for (int jj = 1; jj <= j; ++jj) {
    cur.assign(j + 1, 0.0);
    for (int ii = 1; ii <= jj; ++ii) cur[ii] = ii * prev[ii] + prev[ii - 1];
    prev = cur;
  }
  return prev[i];
}

DetectorWeights detector_weights(int md, int jmax) {
  if (md < 2) throw std::invalid_argument("detector_weights: md must be >= 2");
  if (jmax < 0) throw std::invalid_argument("detector_weights: jmax must be >= 0");

  DetectorWeights dw;
  dw.md = md;
  dw.jmax = jmax;
  dw.w.assign(md + 1, std::vector<double>(jmax + 1, 0.0));

  // Active-detector count as a Markov chain over photons: a new photon hits an
  // already-active detector with probability a/md.
  dw.w[0][0] = 1.0;
  std::vector<double> state(md + 1, 0.0), next(md + 1, 0.0);
  state[0] = 1.0;
  for (int j = 1; j <= jmax; ++j) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int a = 0; a <= md; ++a) {
      if (state[a] == 0.0) continue;
      next[a] += state[a] * (static_cast<double>(a) / md);
      if (a < md) next[a + 1] += state[a] * (static_cast<double>(md - a) / md);
    }
    state = next;
    for (int i = 0; i <= md; ++i) dw.w[i][j] = state[i];
  }
  return dw;
}

std::vector<double> poisson_binomial(std::span<const double> eps) {
  for (double e : eps)
    if (!(e >= 0.0 && e < 1.0))
      throw std::invalid_argument("poisson_binomial: probabilities must lie in [0, 1)");

  std::vector<double> q{1.0};
  for (double e : eps) {
    q.push_back(0.0);
    for (std::size_t k = q.size() - 1; k > 0; --k) q[k] = q[k] * (1.0 - e) + q[k - 1] * e;
    q[0] *= (1.0 - e);
  }
  return q;
}

std::vector<double> iterated_sums(std::span<const double> s, int kmax) {
  if (kmax > static_cast<int>(s.size()))
    throw std::invalid_argument("iterated_sums: kmax exceeds length of s");
  std::vector<double> S(kmax + 1, 0.0);
  S[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) {
      double coeff = factorial(k - 1) / factorial(k - j);
      double term = coeff * s[j - 1] * S[k - j];
      acc += (j % 2 == 1) ? term : -term;
    }
    S[k] = acc;
  }
  return std::vector<double>(S.begin() + 1, S.end());
}

std::vector<double> power_sums_from_iterated(std::span<const double> S, int kmax) {
  if (kmax > static_cast<int>(S.size()))
    throw std::invalid_argument("power_sums_from_iterated: kmax exceeds length of S");
  if (kmax >= 2 && !(S[0] > 0.0))
    throw std::domain_error("power_sums_from_iterated: non-invertible input (S_1 <= 0)");

  // Solve the recursion for s_k; the j = k term isolates s_k.
  std::vector<double> s(kmax, 0.0);
  std::vector<double> Sfull(kmax + 1, 0.0);
  Sfull[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) Sfull[k] = S[k - 1];
  for (int k = 1; k <= kmax; ++k) {
    double acc = 0.0;
    for (int j = 1; j < k; ++j) {
      double coeff = factorial(k - 1) / factorial(k - j);
      double term = coeff * s[j - 1] * Sfull[k - j];
      acc += (j % 2 == 1) ? term : -term;
    }
    double lead = ((k % 2 == 1) ? 1.0 : -1.0) * factorial(k - 1);
    s[k - 1] = (Sfull[k] - acc) / lead;
  }
  return s;
}

std::vector<double> forward_transform(std::span<const double> s, int md) {
  if (static_cast<int>(s.size()) < md)
    throw std::invalid_argument("forward_transform: need s_1..s_md");
  auto S = iterated_sums(s.first(md), md);

  // Truncated Q~_k = 1/k! * sum_{j=0}^{md-k} (-1)^j / j! * S_{j+k}, S_0 = 1.
  std::vector<double> q(md + 1, 0.0);
  auto Sat = [&](int k) { return k == 0 ? 1.0 : S[k - 1]; };
  for (int k = 1; k <= md; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= md - k; ++j) {
      double term = Sat(j + k) / factorial(j);
      acc += (j % 2 == 0) ? term : -term;
    }
    q[k] = acc / factorial(k);
  }

  auto dw = detector_weights(md, md);
  std::vector<double> D(md + 1, 0.0);
  double total = 0.0;
  for (int i = 1; i <= md; ++i) {
    double acc = 0.0;
    for (int j = i; j <= md; ++j) acc += dw.at(i, j) * q[j];
    D[i] = acc;
    total += acc;
  }
  D[0] = 1.0 - total;
  return D;
}

InversionResult inverse_transform(std::span<const double> D) {
  int md = static_cast<int>(D.size()) - 1;
  if (md < 2) throw std::invalid_argument("inverse_transform: need D_0..D_md with md >= 2");

  auto dw = detector_weights(md, md);

  // A Q~ = (D_1..D_md), A upper triangular with A[i][j] = w_{i,j}.
  std::vector<double> q(md + 1, 0.0);
  for (int i = md; i >= 1; --i) {
    double acc = D[i];
    for (int j = i + 1; j <= md; ++j) acc -= dw.at(i, j) * q[j];
    q[i] = acc / dw.at(i, i);
  }

  // Cascade: S_md = md! Q~_md, then S_k = k! Q~_k - sum_{j>=1} (-1)^j / j! S_{j+k}.
  std::vector<double> S(md + 1, 0.0);
  for (int k = md; k >= 1; --k) {
    double acc = q[k] * factorial(k);
    for (int j = 1; j <= md - k; ++j) {
      double term = S[j + k] / factorial(j);
      acc -= (j % 2 == 0) ? term : -term;
    }
    S[k] = acc;
  }

  InversionResult res;
  if (!(S[1] > 0.0)) {
    res.degenerate = true;
    res.s.assign(md, 0.0);
    return res;
  }
  res.s = power_sums_from_iterated(std::span<const double>(S).subspan(1), md);
  return res;
}

std::vector<double> exact_detector_distribution(std::span<const double> eps, int md) {
  auto q = poisson_binomial(eps);
  int jmax = static_cast<int>(q.size()) - 1;
  auto dw = detector_weights(md, jmax);
  std::vector<double> D(md + 1, 0.0);
  for (int j = 0; j <= jmax; ++j)
    for (int i = 0; i <= std::min(j, md); ++i) D[i] += dw.at(i, j) * q[j];
  return D;
}

double gamma_diagnostic(std::span<const double> eps) {
  double g = 0.0;
  for (double e : eps) g = std::max(g, e);
  return g;
}

}  // namespace molmap
