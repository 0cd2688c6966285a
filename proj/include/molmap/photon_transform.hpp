#pragma once
#include <span>
#include <vector>

namespace molmap {

/// Stirling number of the second kind S(j,i), standard recurrence.
/// Returns 0 for i > j; throws on negative input. Exact in double up to j = 20.
double stirling2(int j, int i);

/// w[i][j] = probability that j emitted photons activate exactly i of md
/// detectors, photons landing independently and uniformly.
struct DetectorWeights {
  int md{0};
  int jmax{0};
  // w[i][j], 0 <= i <= md, 0 <= j <= jmax (entries with i > min(j, md) are 0).
  std::vector<std::vector<double>> w;

  double at(int i, int j) const { return w[i][j]; }
};

DetectorWeights detector_weights(int md, int jmax);

/// Emitted-photon-count distribution for independent Bernoulli emitters,
/// computed by folding in one emitter at a time.
std::vector<double> poisson_binomial(std::span<const double> eps);

/// Iterated sums S_1..S_kmax from power sums s_1..s_kmax:
/// S_0 = 1, S_k = sum_{j=1..k} (-1)^{j+1} (k-1)!/(k-j)! s_j S_{k-j}.
std::vector<double> iterated_sums(std::span<const double> s, int kmax);

/// Inverse of iterated_sums. Throws std::domain_error when S_1 <= 0 and
/// kmax >= 2 (non-invertible input).
std::vector<double> power_sums_from_iterated(std::span<const double> S, int kmax);

/// Active-detector-count probabilities (D_0..D_md) from power sums s_1..s_md,
/// truncated at coincidence order md. D_0 by complement.
std::vector<double> forward_transform(std::span<const double> s, int md);

/// Recover power sums from detector probabilities D_0..D_md.
/// degenerate = recovered S_1 <= 0 (no usable photon information); in that
/// case s is the zero vector.
struct InversionResult {
  bool degenerate{false};
  std::vector<double> s;  // length md
};

InversionResult inverse_transform(std::span<const double> D);

/// Exact detector distribution D_0..D_md for an explicit emitter list
/// (full Poisson binomial composed with detector weights, no truncation).
std::vector<double> exact_detector_distribution(std::span<const double> eps, int md);

/// Bias proxy gamma(x) = max_j eps_j.
double gamma_diagnostic(std::span<const double> eps);

}  // namespace molmap
