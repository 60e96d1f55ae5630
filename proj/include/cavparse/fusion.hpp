#pragma once

#include <span>
#include <string>
#include <vector>

#include "cavparse/ganet.hpp"
#include "cavparse/prob.hpp"

namespace cavparse::fusion {

// kTriple feeds p_vis ++ v_local ++ v_global (3M inputs). kFusedContext feeds
// p_vis ++ mean(v_local, v_global) (2M inputs) for single-context-vector ablations.
enum class InputMode { kTriple, kFusedContext };

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& name);

// One hidden sigmoid layer, softmax output. Input weights are row-major
// (inputs x hidden); their rows split into the visual, local and global blocks.
struct IntegrationNet {
  int class_count = 0;
  int hidden = 0;
  InputMode mode = InputMode::kTriple;
  std::vector<double> input_weights;   // in x H
  std::vector<double> input_bias;      // H
  std::vector<double> output_weights;  // H x M
  std::vector<double> output_bias;     // M

  int input_size() const { return (mode == InputMode::kTriple ? 3 : 2) * class_count; }

  friend bool operator==(const IntegrationNet&, const IntegrationNet&) = default;
};

std::size_t genome_length(int class_count, int hidden, InputMode mode = InputMode::kTriple);

IntegrationNet zero_net(int class_count, int hidden, InputMode mode = InputMode::kTriple);

// Layout: input weights, input biases, output weights, output biases.
std::vector<double> pack_genome(const IntegrationNet& net);
IntegrationNet unpack_genome(std::span<const double> genome, int class_count, int hidden,
                             InputMode mode = InputMode::kTriple);

void validate(const IntegrationNet& net);

// Concatenated network input for one superpixel.
std::vector<double> make_input(InputMode mode, std::span<const double> p_vis, std::span<const double> v_local,
                               std::span<const double> v_global);

// Forward pass over a prepared input; `hidden_buf` must have net.hidden slots.
void forward_input(const IntegrationNet& net, std::span<const double> input, std::span<double> hidden_buf,
                   std::span<double> out);

ProbVector forward(const IntegrationNet& net, std::span<const double> p_vis, std::span<const double> v_local,
                   std::span<const double> v_global);

struct FusionSample {
  ProbVector p_vis;
  ProbVector v_local;
  ProbVector v_global;
  int truth = 0;
  double weight = 1.0;  // pixel count
};

// Row-major prepared inputs for repeated fitness evaluation.
struct FusionBatch {
  InputMode mode = InputMode::kTriple;
  int class_count = 0;
  int input_size = 0;
  std::vector<double> inputs;
  std::vector<int> truth;
  std::vector<double> weight;
  double total_weight = 0;

  std::size_t size() const { return truth.size(); }
};

FusionBatch make_batch(std::span<const FusionSample> samples, int class_count, InputMode mode);

// Weighted argmax accuracy in [0, 1].
double weighted_accuracy(const IntegrationNet& net, const FusionBatch& batch);

struct IntegrationResult {
  IntegrationNet net;
  ganet::GaResult ga;
};

IntegrationResult train_integration(std::span<const FusionSample> samples, int class_count, int hidden,
                                    InputMode mode, const ganet::GaConfig& cfg);

int predict_label(const IntegrationNet& net, std::span<const double> p_vis, std::span<const double> v_local,
                  std::span<const double> v_global);

// Net whose argmax reproduces argmax(p_vis): hidden unit i reads visual input
// i only, output k reads hidden unit k only. Requires hidden >= class_count.
IntegrationNet pass_through_visual(int class_count, int hidden, InputMode mode = InputMode::kTriple,
                                   double gain = 1.0);

}  // namespace cavparse::fusion
