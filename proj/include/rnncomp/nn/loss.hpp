#pragma once

#include <span>
#include <vector>

#include "rnncomp/matrix.hpp"

namespace rnncomp::nn {

struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;  // with respect to the logits
};

// Max-subtracted softmax cross-entropy; gradient is softmax - onehot(target).
LossAndGradient softmax_cross_entropy(std::span<const double> logits, int target);
Vector softmax(std::span<const double> logits);

// Element-wise binary cross-entropy of sigmoid(logits) against targets in
// [0, 1], summed over entries; gradient is sigmoid(logits) - targets.
LossAndGradient sigmoid_cross_entropy(std::span<const double> logits, std::span<const double> targets);

// exp(mean cross-entropy in nats)
double perplexity(double mean_cross_entropy);

// Element-wise mean over time. Throws DomainError on an empty sequence.
Vector mean_pool(const std::vector<Vector>& states);
Vector mean_pool(std::span<const Vector> states);

}  // namespace rnncomp::nn
