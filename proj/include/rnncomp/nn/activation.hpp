#pragma once

#include <string_view>

namespace rnncomp::nn {

enum class Activation { Tanh, Sigmoid, Identity, ReLU };

double activate(Activation kind, double z);

// d activate / dz, expressed through the activation output a = activate(z).
// Every supported activation is invertible enough for this to be exact
// (ReLU uses a > 0, matching z > 0).
double derivative_from_output(Activation kind, double a);

std::string_view to_string(Activation kind);
// Throws DomainError on an unknown name.
Activation activation_from_string(std::string_view name);

}  // namespace rnncomp::nn
