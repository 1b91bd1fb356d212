#include "fedzip/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "fedzip/errors.hpp"

namespace fedzip {

namespace {

double sorted_median(std::span<const double> sorted) {
  auto n = sorted.size();
  if (n == 0) return 0.0;
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

LaplaceFit fit_laplace(std::span<const double> samples) {
  if (samples.empty()) fail(Errc::EmptyInput, "cannot fit a distribution to no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  LaplaceFit fit;
  fit.mu = sorted_median(sorted);
  double sum = 0.0;
  for (auto x : sorted) sum += std::abs(x - fit.mu);
  fit.b = sum / static_cast<double>(sorted.size());
  return fit;
}

double laplace_cdf(double x, const LaplaceFit& fit) noexcept {
  if (fit.b <= 0.0) return x < fit.mu ? 0.0 : 1.0;
  double z = (x - fit.mu) / fit.b;
  return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double cdf_distance(std::span<const double> sorted_samples, const LaplaceFit& fit) {
  if (sorted_samples.empty() || fit.b <= 0.0) return 0.0;
  double n = static_cast<double>(sorted_samples.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i)
    total += std::abs((static_cast<double>(i) + 0.5) / n - laplace_cdf(sorted_samples[i], fit));
  return total / n;
}

ErrorDistribution distribution_from_samples(std::vector<double> samples, std::size_t bins, double eps_abs) {
  if (bins < 1) fail(Errc::InvalidArgument, "need at least one histogram bin");
  ErrorDistribution d;
  d.samples = std::move(samples);
  for (auto e : d.samples) d.max_abs_error = std::max(d.max_abs_error, std::abs(e));
  d.eps_abs = eps_abs > 0.0 ? eps_abs : d.max_abs_error;
  double half = d.eps_abs > 0.0 ? d.eps_abs : 1.0;

  d.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    d.bin_edges[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(bins);
  d.counts.assign(bins, 0);
  for (auto e : d.samples) {
    auto pos = (e + half) / (2.0 * half) * static_cast<double>(bins);
    auto bin = static_cast<std::ptrdiff_t>(std::floor(pos));
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++d.counts[static_cast<std::size_t>(bin)];
  }

  if (!d.samples.empty()) {
    std::vector<double> sorted = d.samples;
    std::sort(sorted.begin(), sorted.end());
    auto fit = fit_laplace(sorted);
    d.laplace_mu = fit.mu;
    d.laplace_b = fit.b;
    d.goodness = cdf_distance(sorted, fit);
  }
  return d;
}

ErrorDistribution error_distribution(std::span<const float> original, std::span<const float> reconstructed,
                                     std::size_t bins, double eps_abs) {
  if (original.size() != reconstructed.size())
    fail(Errc::LengthMismatch, "original and reconstructed arrays differ in length");
  std::vector<double> samples(original.size());
  for (std::size_t i = 0; i < original.size(); ++i)
    samples[i] = static_cast<double>(original[i]) - static_cast<double>(reconstructed[i]);
  return distribution_from_samples(std::move(samples), bins, eps_abs);
}

}  // namespace fedzip
