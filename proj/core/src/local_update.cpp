#include "fedraa/local_update.hpp"

#include <string>

#include "fedraa/error.hpp"
#include "fedraa/rng.hpp"

namespace fedraa {

Fragment local_train(const Fragment& dispatched, const ParamVector& full_params,
                     const ModelSpec& spec, const FragmentSpec& frag_spec,
                     std::span<const Sample> shard, const LocalTrainOptions& opt) {
  if (opt.iterations < 1) throw ContractViolation("local_train: iterations must be >= 1");
  if (opt.gamma < 0.0) throw ContractViolation("local_train: gamma must be >= 0");
  if (shard.empty()) throw ContractViolation("local_train: empty shard");
  if (dispatched.values.size() != frag_spec.param_indices.size()) {
    throw ContractViolation("local_train: fragment length mismatch");
  }

  // Working copy: the dispatched global snapshot with the fragment values laid
  // in. Everything outside the fragment stays frozen for the whole task.
  ParamVector working = full_params;
  for (std::size_t i = 0; i < frag_spec.param_indices.size(); ++i) {
    working[frag_spec.param_indices[i]] = dispatched.values[i];
  }
  const ParamVector anchor = working;

  Rng rng(opt.rng_seed);
  const bool full_batch = opt.batch_size >= shard.size();
  std::vector<Sample> batch;
  if (!full_batch) batch.reserve(opt.batch_size);

  for (std::size_t step = 1; step <= opt.iterations; ++step) {
    ParamVector grad;
    if (full_batch) {
      grad = grad_g(working, anchor, spec, shard, opt.rho, frag_spec.param_indices);
    } else {
      batch.clear();
      for (std::size_t b = 0; b < opt.batch_size; ++b) {
        batch.push_back(shard[rng.bounded(shard.size())]);
      }
      grad = grad_g(working, anchor, spec, batch, opt.rho, frag_spec.param_indices);
    }
    for (std::size_t k : frag_spec.param_indices) {
      working[k] -= opt.gamma * grad[k];
    }
    for (std::size_t k : frag_spec.param_indices) {
      if (!std::isfinite(working[k])) {
        throw NumericError("local_train: non-finite parameter after step " +
                           std::to_string(step) + " on fragment " +
                           std::to_string(frag_spec.index));
      }
    }
  }

  Fragment out;
  out.spec_index = frag_spec.index;
  out.version = dispatched.version;
  out.values.reserve(frag_spec.param_indices.size());
  for (std::size_t k : frag_spec.param_indices) out.values.push_back(working[k]);
  return out;
}

}  // namespace fedraa
