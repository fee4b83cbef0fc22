#include "rnncomp/errors.hpp"
#include "rnncomp/tasks.hpp"

namespace rnncomp::tasks {

MemorizationSample gen_memorization(std::size_t n_bits, std::size_t delay, Rng& rng) {
  if (n_bits == 0) throw DomainError("gen_memorization: n_bits must be positive");
  MemorizationSample s;
  s.delay = delay;
  const std::size_t length = 2 * n_bits + delay;
  s.inputs.assign(length, Vector(kMemorizationChannels, 0.0));
  s.targets.assign(length, 0.0);
  s.mask.assign(length, 0.0);
  for (std::size_t i = 0; i < n_bits; ++i) {
    const int bit = rng.bernoulli(0.5) ? 1 : 0;
    s.bits.push_back(bit);
    s.inputs[i][0] = bit;
  }
  const std::size_t recall = n_bits + delay;
  s.inputs[recall][1] = 1.0;
  for (std::size_t i = 0; i < n_bits; ++i) {
    s.targets[recall + i] = s.bits[i];
    s.mask[recall + i] = 1.0;
  }
  return s;
}

nn::Example MemorizationSample::to_example() const {
  nn::Example ex;
  ex.inputs = inputs;
  ex.mask = mask;
  ex.targets.reserve(targets.size());
  for (double t : targets) ex.targets.push_back(Vector{t});
  return ex;
}

std::vector<nn::Example> memorization_batch(std::size_t batch, std::size_t n_bits, std::size_t delay, Rng& rng) {
  std::vector<nn::Example> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(gen_memorization(n_bits, delay, rng).to_example());
  return out;
}

}  // namespace rnncomp::tasks
