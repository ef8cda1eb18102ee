#include "fedraa/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedraa/error.hpp"

namespace fedraa {

std::vector<std::size_t> largest_remainder_counts(std::span<const double> ratios,
                                                  std::size_t total) {
  const std::size_t m = ratios.size();
  std::vector<std::size_t> counts(m);
  std::vector<double> remainders(m);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double exact = ratios[j] * static_cast<double>(total);
    counts[j] = static_cast<std::size_t>(std::floor(exact));
    remainders[j] = exact - std::floor(exact);
    assigned += counts[j];
  }
  // Hand out the leftovers by descending remainder, ties to lower index.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    counts[order[k % m]] += 1;
  }
  return counts;
}

namespace {

void check_ratios(std::span<const double> ratios, std::size_t m) {
  if (ratios.size() != m) {
    throw ConfigError("partition: ratios must have length M=" + std::to_string(m) +
                      ", got " + std::to_string(ratios.size()));
  }
  double sum = 0.0;
  for (double r : ratios) {
    if (r <= 0.0) throw ConfigError("partition: ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("partition: ratios must sum to 1, got " + std::to_string(sum));
  }
}

}  // namespace

std::vector<FragmentSpec> partition_model(const ModelSpec& spec, std::size_t m,
                                          std::span<const double> ratios) {
  spec.validate();
  if (m < 1) throw ConfigError("partition: M must be >= 1");
  check_ratios(ratios, m);

  const bool hidden = spec.hidden_dim > 0;
  const std::size_t units = hidden ? spec.hidden_dim : spec.input_dim;
  if (units < m) {
    throw InfeasiblePartition("partition: " + std::to_string(units) +
                              " divisible units cannot cover M=" + std::to_string(m) +
                              " fragments");
  }
  const std::vector<std::size_t> counts = largest_remainder_counts(ratios, units);
  for (std::size_t j = 0; j < m; ++j) {
    if (counts[j] == 0) {
      throw InfeasiblePartition("partition: fragment " + std::to_string(j) +
                                " would own 0 units");
    }
  }

  std::vector<FragmentSpec> fragments(m);
  std::size_t next_unit = 0;
  for (std::size_t j = 0; j < m; ++j) {
    FragmentSpec& frag = fragments[j];
    frag.index = j;
    frag.unit_begin = next_unit;
    frag.unit_end = next_unit + counts[j];
    next_unit = frag.unit_end;

    if (hidden) {
      // input-weight rows, hidden biases, output-weight columns of the block
      for (std::size_t h = frag.unit_begin; h < frag.unit_end; ++h) {
        for (std::size_t f = 0; f < spec.input_dim; ++f) {
          frag.param_indices.push_back(spec.w1_index(h, f));
        }
      }
      for (std::size_t h = frag.unit_begin; h < frag.unit_end; ++h) {
        frag.param_indices.push_back(spec.b1_index(h));
      }
      for (std::size_t h = frag.unit_begin; h < frag.unit_end; ++h) {
        for (std::size_t c = 0; c < spec.output_dim; ++c) {
          frag.param_indices.push_back(spec.w2_index(h, c));
        }
      }
      if (j == m - 1) {
        for (std::size_t c = 0; c < spec.output_dim; ++c) {
          frag.param_indices.push_back(spec.b2_index(c));
        }
      }
    } else {
      // weight columns of the owned input features
      for (std::size_t f = frag.unit_begin; f < frag.unit_end; ++f) {
        for (std::size_t c = 0; c < spec.output_dim; ++c) {
          frag.param_indices.push_back(spec.w_index(f, c));
        }
      }
      if (j == m - 1) {
        for (std::size_t c = 0; c < spec.output_dim; ++c) {
          frag.param_indices.push_back(spec.b_index(c));
        }
      }
    }
    std::sort(frag.param_indices.begin(), frag.param_indices.end());
  }
  check_partition_cover(fragments, spec.param_count());
  return fragments;
}

void check_partition_cover(const std::vector<FragmentSpec>& fragments,
                           std::size_t param_count) {
  std::vector<char> seen(param_count, 0);
  std::size_t covered = 0;
  for (const FragmentSpec& frag : fragments) {
    for (std::size_t k : frag.param_indices) {
      if (k >= param_count) {
        throw ContractViolation("partition cover: index out of range");
      }
      if (seen[k]) {
        throw ContractViolation("partition cover: index " + std::to_string(k) +
                                " owned twice");
      }
      seen[k] = 1;
      ++covered;
    }
  }
  if (covered != param_count) {
    throw ContractViolation("partition cover: " + std::to_string(param_count - covered) +
                            " parameters unowned");
  }
}

Fragment extract_fragment(const ParamVector& global, const FragmentSpec& spec) {
  Fragment frag;
  frag.spec_index = spec.index;
  frag.version = spec.update_count;
  frag.values.reserve(spec.param_indices.size());
  for (std::size_t k : spec.param_indices) frag.values.push_back(global[k]);
  return frag;
}

void merge_fragment(ParamVector& global, FragmentSpec& spec, const Fragment& trained,
                    double alpha_t) {
  if (trained.values.size() != spec.param_indices.size()) {
    throw ContractViolation("merge_fragment: fragment " + std::to_string(spec.index) +
                            " expects " + std::to_string(spec.param_indices.size()) +
                            " values, got " + std::to_string(trained.values.size()));
  }
  if (!(alpha_t > 0.0 && alpha_t <= 1.0)) {
    throw ContractViolation("merge_fragment: alpha_t must be in (0,1]");
  }
  for (std::size_t i = 0; i < trained.values.size(); ++i) {
    const std::size_t k = spec.param_indices[i];
    global[k] = (1.0 - alpha_t) * global[k] + alpha_t * trained.values[i];
  }
  spec.update_count += 1;
  if (!all_finite(std::span<const double>(global))) {
    throw NumericError("merge_fragment: non-finite parameter after merging fragment " +
                       std::to_string(spec.index));
  }
}

}  // namespace fedraa
