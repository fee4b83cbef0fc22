#include "rnncomp/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnncomp/errors.hpp"
#include "rnncomp/nn/activation.hpp"

namespace rnncomp::nn {

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("softmax: empty logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

LossAndGradient softmax_cross_entropy(std::span<const double> logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw DomainError("softmax_cross_entropy: target " + std::to_string(target) + " outside [0, " +
                      std::to_string(logits.size()) + ")");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  LossAndGradient out{0.0, Vector(logits.size())};
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.gradient[i] = std::exp(logits[i] - peak);
    total += out.gradient[i];
  }
  out.loss = std::log(total) - (logits[static_cast<std::size_t>(target)] - peak);
  for (double& v : out.gradient) v /= total;
  out.gradient[static_cast<std::size_t>(target)] -= 1.0;
  return out;
}

LossAndGradient sigmoid_cross_entropy(std::span<const double> logits, std::span<const double> targets) {
  if (logits.size() != targets.size()) throw DomainError("sigmoid_cross_entropy: length mismatch");
  LossAndGradient out{0.0, Vector(logits.size())};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = targets[i];
    // softplus(z) - y z, written to avoid overflow for large |z|
    out.loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
    out.gradient[i] = activate(Activation::Sigmoid, z) - y;
  }
  return out;
}

double perplexity(double mean_cross_entropy) { return std::exp(mean_cross_entropy); }

Vector mean_pool(std::span<const Vector> states) {
  if (states.empty()) throw DomainError("mean_pool: empty sequence");
  Vector mean(states.front().size(), 0.0);
  for (const auto& s : states) {
    if (s.size() != mean.size()) throw DomainError("mean_pool: ragged states");
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  const double n = static_cast<double>(states.size());
  for (double& v : mean) v /= n;
  return mean;
}

Vector mean_pool(const std::vector<Vector>& states) { return mean_pool(std::span<const Vector>(states)); }

}  // namespace rnncomp::nn
