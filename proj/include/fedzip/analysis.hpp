#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedzip {

struct LaplaceFit {
  double mu = 0.0;
  double b = 0.0;
};

// Maximum-likelihood fit: mu is the sample median, b the mean |x - mu|.
LaplaceFit fit_laplace(std::span<const double> samples);
double laplace_cdf(double x, const LaplaceFit& fit) noexcept;

// Mean |F_empirical - F_laplace| over the sorted samples, with the empirical
// CDF taken at the midpoint (i + 0.5) / n.
double cdf_distance(std::span<const double> sorted_samples, const LaplaceFit& fit);

struct ErrorDistribution {
  std::vector<double> samples;           // original - reconstructed
  std::vector<double> bin_edges;         // bins + 1 edges over [-eps_abs, eps_abs]
  std::vector<std::uint64_t> counts;
  double eps_abs = 0.0;
  double laplace_mu = 0.0;
  double laplace_b = 0.0;
  double goodness = 0.0;
  double max_abs_error = 0.0;
};

// Histogram range is [-eps_abs, eps_abs]; eps_abs <= 0 uses the largest observed
// |error| instead. Samples outside the range land in the edge bins.
ErrorDistribution error_distribution(std::span<const float> original, std::span<const float> reconstructed,
                                     std::size_t bins, double eps_abs = 0.0);
ErrorDistribution distribution_from_samples(std::vector<double> samples, std::size_t bins, double eps_abs = 0.0);

}  // namespace fedzip
