#include "td3sched/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "td3sched/errors.hpp"

namespace td3sched {

namespace {

constexpr char kMagic[8] = {'T', 'D', '3', 'S', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void apply_activation(Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::linear: break;
  }
}

// Multiplies grad in place by the activation derivative, expressed through
// the activation output.
void apply_derivative(Eigen::MatrixXd& grad, const Eigen::MatrixXd& out, Activation a) {
  switch (a) {
    case Activation::relu: grad = (out.array() > 0.0).select(grad, 0.0); break;
    case Activation::tanh: grad.array() *= 1.0 - out.array().square(); break;
    case Activation::linear: break;
  }
}

Activation activation_from_tag(std::uint8_t tag) {
  if (tag > 2) throw IoError("unknown activation tag " + std::to_string(tag));
  return static_cast<Activation>(tag);
}

template <typename T>
void put(std::string& buf, T value) {
  auto bits = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  buf.append(bits.data(), bits.size());
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path) : data_(data), path_(path) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw IoError("truncated parameter file " + path_.string());
    std::array<char, sizeof(T)> bits;
    std::memcpy(bits.data(), data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  void expect_magic() {
    if (data_.size() < sizeof kMagic || std::memcmp(data_.data(), kMagic, sizeof kMagic) != 0) {
      throw IoError("not a parameter file (bad magic): " + path_.string());
    }
    pos_ = sizeof kMagic;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

void MlpGradients::set_zero() {
  for (DenseLayer& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

void MlpGradients::add_scaled(const MlpGradients& other, double scale) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += scale * other.layers[k].weight;
    layers[k].bias += scale * other.layers[k].bias;
  }
}

double MlpGradients::max_abs() const {
  double m = 0.0;
  for (const DenseLayer& l : layers) {
    if (l.weight.size() > 0) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation output, Activation hidden)
    : sizes_(std::move(layer_sizes)), output_(output), hidden_(hidden) {
  if (sizes_.size() < 2) throw DimensionError("an MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw DimensionError("layer sizes must be positive");
  }
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
    layers_.push_back(DenseLayer{Eigen::MatrixXd::Zero(sizes_[k + 1], sizes_[k]),
                                 Eigen::VectorXd::Zero(sizes_[k + 1])});
  }
}

Mlp Mlp::initialized(std::vector<int> layer_sizes, Activation output, Rng& rng, double final_scale) {
  Mlp net(std::move(layer_sizes), output);
  const std::size_t last = net.layers_.size() - 1;
  for (std::size_t k = 0; k < net.layers_.size(); ++k) {
    DenseLayer& l = net.layers_[k];
    const double bound = k == last ? final_scale : 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    // Row-major draw order keeps initialization independent of Eigen storage.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = u(rng);
  }
  return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  Cache scratch;
  return forward(input, scratch);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
  if (layers_.empty()) throw ContractViolation("forward on an empty network");
  if (input.rows() != sizes_.front()) {
    throw DimensionError("input has " + std::to_string(input.rows()) + " features, network expects " +
                         std::to_string(sizes_.front()));
  }
  if (!input.allFinite()) throw ValidationError("non-finite network input");
  cache.owner = this;
  cache.version = version_;
  cache.activations.resize(layers_.size() + 1);
  cache.activations[0] = input;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd z = layers_[k].weight * cache.activations[k];
    z.colwise() += layers_[k].bias;
    apply_activation(z, k + 1 == layers_.size() ? output_ : hidden_);
    cache.activations[k + 1] = std::move(z);
  }
  return cache.activations.back();
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(input.size()), 1);
  for (std::size_t j = 0; j < input.size(); ++j) x(static_cast<Eigen::Index>(j), 0) = input[j];
  const Eigen::MatrixXd y = forward(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

MlpGradients Mlp::backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.activations.size() != layers_.size() + 1) {
    throw ContractViolation("backward called with a stale or foreign forward cache");
  }
  const Eigen::MatrixXd& out = cache.activations.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw DimensionError("output gradient shape does not match the forward output");
  }
  MlpGradients grads;
  grads.layers.resize(layers_.size());
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    apply_derivative(delta, cache.activations[k + 1], k + 1 == layers_.size() ? output_ : hidden_);
    grads.layers[k].weight.noalias() = delta * cache.activations[k].transpose();
    grads.layers[k].bias = delta.rowwise().sum();
    if (k > 0 || input_grad != nullptr) {
      Eigen::MatrixXd upstream = layers_[k].weight.transpose() * delta;
      delta = std::move(upstream);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return grads;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return sizes_ == other.sizes_ && output_ == other.output_ && hidden_ == other.hidden_;
}

bool Mlp::all_finite() const {
  for (const DenseLayer& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void Mlp::check_finite(std::string_view context) const {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (!layers_[k].weight.allFinite()) {
      throw NumericError(std::string(context) + ": non-finite weight in layer " + std::to_string(k));
    }
    if (!layers_[k].bias.allFinite()) {
      throw NumericError(std::string(context) + ": non-finite bias in layer " + std::to_string(k));
    }
  }
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (const DenseLayer& l : layers_) {
    g.layers.push_back(DenseLayer{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                                  Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

void soft_update(Mlp& target, const Mlp& source, double tau) {
  if (!target.same_architecture(source)) {
    throw DimensionError("soft_update between networks of different architecture");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("soft_update tau must lie in [0, 1]");
  auto& dst = target.mutable_layers();
  const auto& src = source.layers();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst[k].weight = tau * src[k].weight + (1.0 - tau) * dst[k].weight;
    dst[k].bias = tau * src[k].bias + (1.0 - tau) * dst[k].bias;
  }
  target.check_finite("soft_update");
}

void serialize_params(const Mlp& net, const std::filesystem::path& path) {
  std::string buf(kMagic, sizeof kMagic);
  put<std::uint32_t>(buf, kFormatVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) put<std::uint32_t>(buf, static_cast<std::uint32_t>(s));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(net.hidden_activation()));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(net.output_activation()));
  for (const DenseLayer& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put<double>(buf, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) put<double>(buf, l.bias(r));
  }
  put<std::uint64_t>(buf, parameter_checksum(net));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write parameter file " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing parameter file " + path.string());
}

Mlp read_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open parameter file " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data, path);
  r.expect_magic();
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw IoError("parameter file version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kFormatVersion) + "): " + path.string());
  }
  const auto n_sizes = r.get<std::uint32_t>();
  if (n_sizes < 2 || n_sizes > 64) throw IoError("implausible layer count in " + path.string());
  std::vector<int> sizes;
  for (std::uint32_t k = 0; k < n_sizes; ++k) {
    const auto s = r.get<std::uint32_t>();
    if (s == 0 || s > (1u << 20)) throw IoError("implausible layer size in " + path.string());
    sizes.push_back(static_cast<int>(s));
  }
  const Activation hidden = activation_from_tag(r.get<std::uint8_t>());
  const Activation output = activation_from_tag(r.get<std::uint8_t>());
  Mlp net(sizes, output, hidden);
  auto& layers = net.mutable_layers();
  for (DenseLayer& l : layers) {
    for (Eigen::Index row = 0; row < l.weight.rows(); ++row) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(row, c) = r.get<double>();
    }
    for (Eigen::Index row = 0; row < l.bias.size(); ++row) l.bias(row) = r.get<double>();
  }
  const auto checksum = r.get<std::uint64_t>();
  if (!r.at_end()) throw IoError("trailing bytes in parameter file " + path.string());
  if (checksum != parameter_checksum(net)) throw IoError("checksum mismatch in " + path.string());
  return net;
}

void deserialize_params(Mlp& net, const std::filesystem::path& path) {
  Mlp loaded = read_params(path);
  if (!loaded.same_architecture(net)) {
    auto describe = [](const Mlp& m) {
      std::string s;
      for (int size : m.layer_sizes()) s += (s.empty() ? "" : "-") + std::to_string(size);
      return s + " " + std::string(to_string(m.output_activation()));
    };
    throw DimensionError("architecture mismatch: file has " + describe(loaded) + ", network is " +
                         describe(net));
  }
  net.mutable_layers() = loaded.layers();
}

std::uint64_t parameter_checksum(const Mlp& net) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const DenseLayer& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        const double v = l.weight(r, c);
        h = fnv1a(h, &v, sizeof v);
      }
    }
    h = fnv1a(h, l.bias.data(), sizeof(double) * static_cast<std::size_t>(l.bias.size()));
  }
  return h;
}

}  // namespace td3sched
