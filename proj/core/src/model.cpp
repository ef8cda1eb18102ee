#include "fedraa/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedraa/error.hpp"
#include "fedraa/rng.hpp"

namespace fedraa {

namespace {

double activate(double z, Activation act) {
  return act == Activation::relu ? std::max(0.0, z) : z;
}

double activate_grad(double z, Activation act) {
  return act == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

// Per-sample forward scratch sized once and reused across the batch.
struct Scratch {
  std::vector<double> pre;      // hidden pre-activations
  std::vector<double> hidden;   // activations
  std::vector<double> logits;
  std::vector<double> probs;
};

// Computes logits for one sample, filling hidden scratch when H > 0.
void forward_logits(const ParamVector& p, const ModelSpec& spec, const Sample& s,
                    Scratch& sc) {
  const std::size_t in = spec.input_dim, h_dim = spec.hidden_dim, out = spec.output_dim;
  sc.logits.assign(out, 0.0);
  if (h_dim == 0) {
    for (std::size_t c = 0; c < out; ++c) sc.logits[c] = p[spec.b_index(c)];
    for (std::size_t f = 0; f < in; ++f) {
      const double x = s.features[f];
      if (x == 0.0) continue;
      const std::size_t base = f * out;
      for (std::size_t c = 0; c < out; ++c) sc.logits[c] += p[base + c] * x;
    }
    return;
  }
  sc.pre.assign(h_dim, 0.0);
  sc.hidden.resize(h_dim);
  for (std::size_t h = 0; h < h_dim; ++h) {
    double z = p[spec.b1_index(h)];
    const std::size_t row = spec.w1_index(h, 0);
    for (std::size_t f = 0; f < in; ++f) z += p[row + f] * s.features[f];
    sc.pre[h] = z;
    sc.hidden[h] = activate(z, spec.activation);
  }
  for (std::size_t c = 0; c < out; ++c) sc.logits[c] = p[spec.b2_index(c)];
  for (std::size_t h = 0; h < h_dim; ++h) {
    const double a = sc.hidden[h];
    if (a == 0.0) continue;
    const std::size_t col = spec.w2_index(h, 0);
    for (std::size_t c = 0; c < out; ++c) sc.logits[c] += p[col + c] * a;
  }
}

// Stable softmax; returns the log-normalizer so callers get exact ln(C) for
// all-zero logits.
double softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double denom = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - zmax);
    denom += probs[c];
  }
  for (double& v : probs) v /= denom;
  return zmax + std::log(denom);
}

}  // namespace

void ModelSpec::validate() const {
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (output_dim < 1) throw ConfigError("model: output_dim must be >= 1");
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p(spec.param_count(), 0.0);
  Rng rng(seed);
  if (spec.hidden_dim == 0) {
    const double s = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
    for (double& v : p) v = rng.uniform(-s, s);
    return p;
  }
  const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
  const std::size_t layer1_end = spec.hidden_dim * (spec.input_dim + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = k < layer1_end ? rng.uniform(-s1, s1) : rng.uniform(-s2, s2);
  }
  return p;
}

double forward_loss(const ParamVector& params, const ModelSpec& spec,
                    std::span<const Sample> batch) {
  if (batch.empty()) throw ContractViolation("forward_loss: empty batch");
  Scratch sc;
  double total = 0.0;
  for (const Sample& s : batch) {
    forward_logits(params, spec, s, sc);
    const double logz = softmax(sc.logits, sc.probs);
    total += logz - sc.logits[static_cast<std::size_t>(s.label)];
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) {
    throw NumericError("forward_loss: non-finite loss over batch of " +
                       std::to_string(batch.size()));
  }
  return loss;
}

ParamVector grad_f(const ParamVector& params, const ModelSpec& spec,
                   std::span<const Sample> batch) {
  if (batch.empty()) throw ContractViolation("grad_f: empty batch");
  const std::size_t in = spec.input_dim, h_dim = spec.hidden_dim, out = spec.output_dim;
  ParamVector grad(params.size(), 0.0);
  Scratch sc;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dz2(out), dz1;
  for (const Sample& s : batch) {
    forward_logits(params, spec, s, sc);
    softmax(sc.logits, sc.probs);
    for (std::size_t c = 0; c < out; ++c) {
      dz2[c] = (sc.probs[c] - (static_cast<std::size_t>(s.label) == c ? 1.0 : 0.0)) * inv_b;
    }
    if (h_dim == 0) {
      for (std::size_t c = 0; c < out; ++c) grad[spec.b_index(c)] += dz2[c];
      for (std::size_t f = 0; f < in; ++f) {
        const double x = s.features[f];
        if (x == 0.0) continue;
        const std::size_t base = f * out;
        for (std::size_t c = 0; c < out; ++c) grad[base + c] += dz2[c] * x;
      }
      continue;
    }
    dz1.assign(h_dim, 0.0);
    for (std::size_t c = 0; c < out; ++c) grad[spec.b2_index(c)] += dz2[c];
    for (std::size_t h = 0; h < h_dim; ++h) {
      const double a = sc.hidden[h];
      const std::size_t col = spec.w2_index(h, 0);
      double back = 0.0;
      for (std::size_t c = 0; c < out; ++c) {
        grad[col + c] += dz2[c] * a;
        back += params[col + c] * dz2[c];
      }
      dz1[h] = back * activate_grad(sc.pre[h], spec.activation);
    }
    for (std::size_t h = 0; h < h_dim; ++h) {
      const double d = dz1[h];
      if (d == 0.0) continue;
      grad[spec.b1_index(h)] += d;
      const std::size_t row = spec.w1_index(h, 0);
      for (std::size_t f = 0; f < in; ++f) grad[row + f] += d * s.features[f];
    }
  }
  if (!all_finite(grad)) throw NumericError("grad_f: non-finite gradient");
  return grad;
}

ParamVector grad_g(const ParamVector& params, const ParamVector& anchor,
                   const ModelSpec& spec, std::span<const Sample> batch, double rho,
                   std::span<const std::size_t> mask) {
  if (rho < 0.0) throw ContractViolation("grad_g: rho must be >= 0");
  if (anchor.size() != params.size()) {
    throw ContractViolation("grad_g: anchor length mismatch");
  }
  ParamVector grad = grad_f(params, spec, batch);
  if (rho != 0.0) {
    for (std::size_t k = 0; k < grad.size(); ++k) {
      grad[k] += rho * (params[k] - anchor[k]);
    }
  }
  if (!mask.empty()) {
    ParamVector masked(grad.size(), 0.0);
    for (std::size_t k : mask) masked[k] = grad[k];
    return masked;
  }
  return grad;
}

int predict(const ParamVector& params, const ModelSpec& spec, const Sample& sample) {
  Scratch sc;
  forward_logits(params, spec, sample, sc);
  // ties to the lowest class id
  std::size_t best = 0;
  for (std::size_t c = 1; c < sc.logits.size(); ++c) {
    if (sc.logits[c] > sc.logits[best]) best = c;
  }
  return static_cast<int>(best);
}

double accuracy(const ParamVector& params, const ModelSpec& spec,
                std::span<const Sample> samples) {
  if (samples.empty()) throw ContractViolation("accuracy: empty sample set");
  std::size_t hits = 0;
  for (const Sample& s : samples) {
    if (predict(params, spec, s) == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace fedraa
