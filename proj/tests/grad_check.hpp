#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fedzip/flsim.hpp"

namespace fedzip::testkit {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients of a random TinyNet against central differences
// at `coords` random coordinates for each of `inputs` random single-sample
// inputs. Coordinates whose perturbation flips a rectifier are resampled.
inline GradCheckResult gradient_check(std::size_t coords, std::size_t inputs, std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  GradCheckResult out;
  for (std::size_t in = 0; in < inputs; ++in) {
    auto net = fl::TinyNet::init(8, 16, 5, rng());
    // move parameters off the small init scale so gradients are not tiny
    for (auto& p : net.params()) p *= 2.0;
    fl::Dataset data;
    data.dim = 8;
    data.features.resize(8);
    for (auto& x : data.features) x = g(rng);
    data.labels = {static_cast<std::uint32_t>(rng() % 5)};
    std::vector<std::size_t> idx{0};
    std::vector<double> grad;
    net.loss_and_gradient(data, idx, grad);
    auto pattern = net.active_units(data.row(0));

    std::size_t done = 0, attempts = 0;
    while (done < coords && attempts < coords * 50) {
      ++attempts;
      std::size_t k = rng() % net.params().size();
      double saved = net.params()[k];
      net.params()[k] = saved + h;
      double up = net.loss(data, idx);
      bool kink = net.active_units(data.row(0)) != pattern;
      net.params()[k] = saved - h;
      double down = net.loss(data, idx);
      kink = kink || net.active_units(data.row(0)) != pattern;
      net.params()[k] = saved;
      if (kink) continue;
      double fd = (up - down) / (2 * h);
      double scale = std::max({std::abs(fd), std::abs(grad[k]), 1e-6});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - grad[k]) / scale);
      ++done;
    }
    out.checked += done;
  }
  return out;
}

}  // namespace fedzip::testkit
