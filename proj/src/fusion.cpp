#include "cavparse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "cavparse/context.hpp"
#include "cavparse/simd/kernels.hpp"

namespace cavparse::fusion {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_shape(int class_count, int hidden) {
  if (class_count < 1) throw InvalidInput("integration net: class_count must be >= 1");
  if (hidden < 1) throw InvalidInput("integration net: hidden size must be >= 1");
}

int argmax_lowest(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

// Hidden activations then output logits; returns the argmax without softmax.
int forward_logits(const IntegrationNet& net, const simd::KernelTable& k, const double* input,
                   double* hidden, double* logits) {
  const std::size_t in = net.input_size();
  const std::size_t h = net.hidden;
  const std::size_t m = net.class_count;
  k.affine(input, in, net.input_weights.data(), net.input_bias.data(), h, hidden);
  for (std::size_t j = 0; j < h; ++j) hidden[j] = sigmoid(hidden[j]);
  k.affine(hidden, h, net.output_weights.data(), net.output_bias.data(), m, logits);
  return argmax_lowest({logits, m});
}

}  // namespace

std::string to_string(InputMode mode) { return mode == InputMode::kTriple ? "triple" : "fused"; }

InputMode input_mode_from_string(const std::string& name) {
  if (name == "triple") return InputMode::kTriple;
  if (name == "fused") return InputMode::kFusedContext;
  throw InvalidInput("unknown integration input mode '" + name + "' (expected triple or fused)");
}

std::size_t genome_length(int class_count, int hidden, InputMode mode) {
  check_shape(class_count, hidden);
  const std::size_t in = static_cast<std::size_t>(mode == InputMode::kTriple ? 3 : 2) * class_count;
  const std::size_t h = hidden;
  const std::size_t m = class_count;
  return in * h + h + h * m + m;
}

IntegrationNet zero_net(int class_count, int hidden, InputMode mode) {
  check_shape(class_count, hidden);
  IntegrationNet net;
  net.class_count = class_count;
  net.hidden = hidden;
  net.mode = mode;
  net.input_weights.assign(static_cast<std::size_t>(net.input_size()) * hidden, 0.0);
  net.input_bias.assign(hidden, 0.0);
  net.output_weights.assign(static_cast<std::size_t>(hidden) * class_count, 0.0);
  net.output_bias.assign(class_count, 0.0);
  return net;
}

std::vector<double> pack_genome(const IntegrationNet& net) {
  validate(net);
  std::vector<double> genome;
  genome.reserve(genome_length(net.class_count, net.hidden, net.mode));
  for (const auto* block : {&net.input_weights, &net.input_bias, &net.output_weights, &net.output_bias}) {
    genome.insert(genome.end(), block->begin(), block->end());
  }
  return genome;
}

IntegrationNet unpack_genome(std::span<const double> genome, int class_count, int hidden, InputMode mode) {
  const std::size_t expected = genome_length(class_count, hidden, mode);
  if (genome.size() != expected) {
    throw InvalidInput("unpack_genome: length " + std::to_string(genome.size()) + " != expected " +
                       std::to_string(expected));
  }
  IntegrationNet net = zero_net(class_count, hidden, mode);
  auto it = genome.begin();
  for (auto* block : {&net.input_weights, &net.input_bias, &net.output_weights, &net.output_bias}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(block->size()), block->begin());
    it += static_cast<std::ptrdiff_t>(block->size());
  }
  return net;
}

void validate(const IntegrationNet& net) {
  check_shape(net.class_count, net.hidden);
  const std::size_t h = net.hidden;
  const std::size_t m = net.class_count;
  if (net.input_weights.size() != static_cast<std::size_t>(net.input_size()) * h ||
      net.input_bias.size() != h || net.output_weights.size() != h * m || net.output_bias.size() != m) {
    throw InvalidInput("integration net: inconsistent shapes");
  }
  for (const auto* block : {&net.input_weights, &net.input_bias, &net.output_weights, &net.output_bias}) {
    for (double w : *block) {
      if (!std::isfinite(w)) throw InvalidInput("integration net: non-finite weight");
    }
  }
}

std::vector<double> make_input(InputMode mode, std::span<const double> p_vis, std::span<const double> v_local,
                               std::span<const double> v_global) {
  std::vector<double> input(p_vis.begin(), p_vis.end());
  if (mode == InputMode::kTriple) {
    input.insert(input.end(), v_local.begin(), v_local.end());
    input.insert(input.end(), v_global.begin(), v_global.end());
  } else {
    const ProbVector fused = context::fuse_context(v_local, v_global);
    input.insert(input.end(), fused.begin(), fused.end());
  }
  return input;
}

void forward_input(const IntegrationNet& net, std::span<const double> input, std::span<double> hidden_buf,
                   std::span<double> out) {
  if (static_cast<int>(input.size()) != net.input_size() || static_cast<int>(hidden_buf.size()) < net.hidden ||
      static_cast<int>(out.size()) != net.class_count) {
    throw InvalidInput("forward: buffer sizes do not match the network");
  }
  forward_logits(net, simd::active_kernels(), input.data(), hidden_buf.data(), out.data());
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0;
  for (double& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out) v /= total;
}

ProbVector forward(const IntegrationNet& net, std::span<const double> p_vis, std::span<const double> v_local,
                   std::span<const double> v_global) {
  const std::size_t m = net.class_count;
  if (p_vis.size() != m || v_local.size() != m || v_global.size() != m) {
    throw InvalidInput("forward: input vectors must have length " + std::to_string(m));
  }
  const std::vector<double> input = make_input(net.mode, p_vis, v_local, v_global);
  std::vector<double> hidden(net.hidden);
  ProbVector out(m);
  forward_input(net, input, hidden, out);
  return out;
}

FusionBatch make_batch(std::span<const FusionSample> samples, int class_count, InputMode mode) {
  FusionBatch batch;
  batch.mode = mode;
  batch.class_count = class_count;
  batch.input_size = (mode == InputMode::kTriple ? 3 : 2) * class_count;
  batch.inputs.reserve(samples.size() * batch.input_size);
  for (const auto& s : samples) {
    if (static_cast<int>(s.p_vis.size()) != class_count || static_cast<int>(s.v_local.size()) != class_count ||
        static_cast<int>(s.v_global.size()) != class_count) {
      throw InvalidInput("fusion sample: vector length != class_count");
    }
    if (s.truth < 0 || s.truth >= class_count) throw InvalidInput("fusion sample: class out of range");
    if (!(s.weight >= 0) || !std::isfinite(s.weight)) throw InvalidInput("fusion sample: invalid weight");
    const auto input = make_input(mode, s.p_vis, s.v_local, s.v_global);
    batch.inputs.insert(batch.inputs.end(), input.begin(), input.end());
    batch.truth.push_back(s.truth);
    batch.weight.push_back(s.weight);
    batch.total_weight += s.weight;
  }
  return batch;
}

double weighted_accuracy(const IntegrationNet& net, const FusionBatch& batch) {
  if (batch.input_size != net.input_size() || batch.class_count != net.class_count) {
    throw InvalidInput("weighted_accuracy: batch does not match network");
  }
  if (batch.size() == 0 || !(batch.total_weight > 0)) return 0.0;
  const simd::KernelTable& k = simd::active_kernels();
  std::vector<double> hidden(net.hidden), logits(net.class_count);
  double correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int label = forward_logits(net, k, batch.inputs.data() + i * batch.input_size, hidden.data(), logits.data());
    if (label == batch.truth[i]) correct += batch.weight[i];
  }
  return std::clamp(correct / batch.total_weight, 0.0, 1.0);
}

IntegrationResult train_integration(std::span<const FusionSample> samples, int class_count, int hidden,
                                    InputMode mode, const ganet::GaConfig& cfg) {
  if (samples.empty()) throw InvalidInput("train_integration: no samples");
  const FusionBatch batch = make_batch(samples, class_count, mode);
  const std::size_t len = genome_length(class_count, hidden, mode);
  auto fitness = [&](std::span<const double> genome) {
    return weighted_accuracy(unpack_genome(genome, class_count, hidden, mode), batch);
  };
  IntegrationResult result;
  result.ga = ganet::run(cfg, len, fitness);
  result.net = unpack_genome(result.ga.best.genome, class_count, hidden, mode);
  return result;
}

int predict_label(const IntegrationNet& net, std::span<const double> p_vis, std::span<const double> v_local,
                  std::span<const double> v_global) {
  // Argmax over logits; softmax is monotone, and this matches weighted_accuracy exactly.
  const std::size_t m = net.class_count;
  if (p_vis.size() != m || v_local.size() != m || v_global.size() != m) {
    throw InvalidInput("predict_label: input vectors must have length " + std::to_string(m));
  }
  const std::vector<double> input = make_input(net.mode, p_vis, v_local, v_global);
  std::vector<double> hidden(net.hidden), logits(m);
  return forward_logits(net, simd::active_kernels(), input.data(), hidden.data(), logits.data());
}

IntegrationNet pass_through_visual(int class_count, int hidden, InputMode mode, double gain) {
  if (hidden < class_count) throw InvalidInput("pass_through_visual: hidden must be >= class_count");
  IntegrationNet net = zero_net(class_count, hidden, mode);
  const std::size_t h = hidden;
  const std::size_t m = class_count;
  for (std::size_t i = 0; i < m; ++i) {
    net.input_weights[i * h + i] = gain;
    net.output_weights[i * m + i] = gain;
  }
  return net;
}

}  // namespace cavparse::fusion
