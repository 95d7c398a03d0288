#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "td3sched/random.hpp"

namespace td3sched {

enum class Activation : std::uint8_t { relu = 0, tanh = 1, linear = 2 };

std::string_view to_string(Activation a);

// One affine layer: out = weight * in + bias.
struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;    // fan_out
};

// Same shapes as the network's layers.
struct MlpGradients {
  std::vector<DenseLayer> layers;

  void set_zero();
  void add_scaled(const MlpGradients& other, double scale);
  double max_abs() const;
};

// Dense feedforward network. Batched calls take one sample per column.
class Mlp {
 public:
  // Activations of every layer from a forward pass; tied to the network
  // state that produced it.
  struct Cache {
    const Mlp* owner = nullptr;
    std::uint64_t version = 0;
    std::vector<Eigen::MatrixXd> activations;  // [input, hidden..., output]
  };

  Mlp() = default;
  // All parameters zero.
  Mlp(std::vector<int> layer_sizes, Activation output, Activation hidden = Activation::relu);

  // Hidden layers uniform in +-1/sqrt(fan_in), output layer uniform in
  // +-final_scale.
  static Mlp initialized(std::vector<int> layer_sizes, Activation output, Rng& rng,
                         double final_scale = 3e-3);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;
  std::vector<double> forward(std::span<const double> input) const;

  // Gradients of <output_grad, output> with respect to every parameter,
  // summed over the batch. input_grad, when given, receives d/d input.
  MlpGradients backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                        Eigen::MatrixXd* input_grad = nullptr) const;

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Activation output_activation() const noexcept { return output_; }
  Activation hidden_activation() const noexcept { return hidden_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  // Mutable access invalidates outstanding caches.
  std::vector<DenseLayer>& mutable_layers() noexcept {
    ++version_;
    return layers_;
  }

  std::uint64_t version() const noexcept { return version_; }
  std::size_t parameter_count() const;
  bool same_architecture(const Mlp& other) const;
  bool all_finite() const;
  // Throws NumericError naming the first non-finite tensor.
  void check_finite(std::string_view context) const;
  MlpGradients zero_gradients() const;

 private:
  std::vector<int> sizes_;
  Activation output_ = Activation::linear;
  Activation hidden_ = Activation::relu;
  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

// target <- tau * source + (1 - tau) * target, parameter-wise.
void soft_update(Mlp& target, const Mlp& source, double tau);

// Binary parameter file; layout documented in docs/param_format.md.
void serialize_params(const Mlp& net, const std::filesystem::path& path);
Mlp read_params(const std::filesystem::path& path);
// Loads into `net`, which is left untouched unless the file is valid and
// matches its architecture.
void deserialize_params(Mlp& net, const std::filesystem::path& path);

// Order-sensitive FNV-1a over the raw parameter bytes.
std::uint64_t parameter_checksum(const Mlp& net);

}  // namespace td3sched
