#include "rnncomp/nn/activation.hpp"

#include <cmath>
#include <string>

#include "rnncomp/errors.hpp"

namespace rnncomp::nn {

double activate(Activation kind, double z) {
  switch (kind) {
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Sigmoid:
      // Split by sign so exp never overflows.
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Activation::Identity:
      return z;
    case Activation::ReLU:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

double derivative_from_output(Activation kind, double a) {
  switch (kind) {
    case Activation::Tanh:
      return 1.0 - a * a;
    case Activation::Sigmoid:
      return a * (1.0 - a);
    case Activation::Identity:
      return 1.0;
    case Activation::ReLU:
      return a > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Identity:
      return "identity";
    case Activation::ReLU:
      return "relu";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

}  // namespace rnncomp::nn
