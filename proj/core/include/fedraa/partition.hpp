#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedraa/model.hpp"

namespace fedraa {

// Index set owned by fragment j plus its server-side update counter q(j).
// For hidden_dim > 0 the unit range is over hidden units; for hidden_dim == 0
// it is over input columns of the weight matrix.
struct FragmentSpec {
  std::size_t index = 0;
  std::vector<std::size_t> param_indices;  // sorted, pairwise disjoint across fragments
  std::size_t unit_begin = 0;
  std::size_t unit_end = 0;
  std::uint64_t update_count = 0;  // q(j), incremented once per merge
};

// A fragment's values as extracted from (or trained against) some global
// snapshot, in param_indices order.
struct Fragment {
  std::size_t spec_index = 0;
  std::uint64_t version = 0;  // q(j) at extraction time
  std::vector<double> values;
};

// Splits the model into `m` fragments owning contiguous unit blocks sized by
// largest-remainder rounding of `ratios` (ties to the lower fragment index).
// A fragment owns all parameters incident to its units; output biases ride
// with the last fragment. Throws ConfigError on bad ratios and
// InfeasiblePartition when some fragment would own zero units.
std::vector<FragmentSpec> partition_model(const ModelSpec& spec, std::size_t m,
                                          std::span<const double> ratios);

// Unit counts per fragment under largest-remainder rounding; sums to `total`.
std::vector<std::size_t> largest_remainder_counts(std::span<const double> ratios,
                                                  std::size_t total);

Fragment extract_fragment(const ParamVector& global, const FragmentSpec& spec);

// global[k] <- (1-alpha)*global[k] + alpha*new[k] on owned indices only;
// increments spec.update_count. Throws ContractViolation on length mismatch.
void merge_fragment(ParamVector& global, FragmentSpec& spec, const Fragment& trained,
                    double alpha_t);

// Asserts the exact-cover invariant: disjoint index sets whose union is
// {0..param_count-1}. Throws ContractViolation when violated.
void check_partition_cover(const std::vector<FragmentSpec>& fragments,
                           std::size_t param_count);

}  // namespace fedraa
