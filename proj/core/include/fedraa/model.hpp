#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedraa {

// Flat 64-bit parameter store; length is fixed at model construction and every
// operation must leave all entries finite.
using ParamVector = std::vector<double>;

enum class Activation { relu, identity };

struct Sample {
  std::vector<double> features;
  int label = 0;
};

// One-hidden-layer MLP with softmax cross-entropy; hidden_dim 0 degenerates to
// multinomial logistic regression.
//
// Parameter layout, hidden_dim H > 0 (unit-major so a hidden unit's incident
// parameters form three contiguous runs):
//   [0,              H*in)            input weights, row per hidden unit
//   [H*in,           H*(in+1))        hidden biases
//   [H*(in+1),       H*(in+1)+H*out)  output weights, column per hidden unit
//   [H*(in+1)+H*out, d)               output biases
// H == 0 (feature-major so an input column's weights are contiguous):
//   [0,       in*out)  weights
//   [in*out,  d)       output biases
struct ModelSpec {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::relu;

  std::size_t param_count() const {
    if (hidden_dim == 0) return input_dim * output_dim + output_dim;
    return hidden_dim * (input_dim + 1) + hidden_dim * output_dim + output_dim;
  }

  std::size_t w1_index(std::size_t unit, std::size_t in) const { return unit * input_dim + in; }
  std::size_t b1_index(std::size_t unit) const { return hidden_dim * input_dim + unit; }
  std::size_t w2_index(std::size_t unit, std::size_t out) const {
    return hidden_dim * (input_dim + 1) + unit * output_dim + out;
  }
  std::size_t b2_index(std::size_t out) const {
    return hidden_dim * (input_dim + 1) + hidden_dim * output_dim + out;
  }
  // hidden_dim == 0 accessors.
  std::size_t w_index(std::size_t feature, std::size_t out) const {
    return feature * output_dim + out;
  }
  std::size_t b_index(std::size_t out) const { return input_dim * output_dim + out; }

  void validate() const;  // throws ConfigError
};

// Uniform(-s, s) with s = 1/sqrt(fan_in) per layer; biases drawn like their
// layer's weights.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Mean softmax cross-entropy over the batch. Throws NumericError on NaN/Inf.
double forward_loss(const ParamVector& params, const ModelSpec& spec,
                    std::span<const Sample> batch);

// Mean gradient of the data loss over the batch.
ParamVector grad_f(const ParamVector& params, const ModelSpec& spec,
                   std::span<const Sample> batch);

// Gradient of g(theta) = f(theta) + rho/2 * ||theta - anchor||^2. When `mask`
// is nonempty only those coordinates are returned, all others zero.
ParamVector grad_g(const ParamVector& params, const ParamVector& anchor,
                   const ModelSpec& spec, std::span<const Sample> batch, double rho,
                   std::span<const std::size_t> mask = {});

int predict(const ParamVector& params, const ModelSpec& spec, const Sample& sample);

double accuracy(const ParamVector& params, const ModelSpec& spec,
                std::span<const Sample> samples);

bool all_finite(std::span<const double> values);

}  // namespace fedraa
