#pragma once

#include <cstdint>
#include <span>

#include "fedraa/model.hpp"
#include "fedraa/partition.hpp"

namespace fedraa {

struct LocalTrainOptions {
  std::size_t iterations = 1;  // I, >= 1
  double gamma = 0.005;        // learning rate, > 0
  double rho = 0.1;            // proximal weight, >= 0
  std::size_t batch_size = 128;
  std::uint64_t rng_seed = 0;
};

// Runs `iterations` proximal SGD steps on the client's working copy, anchored
// at the dispatched snapshot. Only parameters owned by `frag_spec` move; the
// rest of the working copy stays at `full_params`. Batches are the whole shard
// when batch_size >= shard size (deterministic full-batch pass), otherwise
// sampled uniformly with replacement from the seeded stream.
// Throws NumericError naming the step if any parameter goes non-finite.
Fragment local_train(const Fragment& dispatched, const ParamVector& full_params,
                     const ModelSpec& spec, const FragmentSpec& frag_spec,
                     std::span<const Sample> shard, const LocalTrainOptions& opt);

}  // namespace fedraa
