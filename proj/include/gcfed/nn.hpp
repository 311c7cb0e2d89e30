#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcfed/tensor.hpp"

namespace gcfed {

/// Samples stored row-major; `sample_shape` is {d} for vector data or {C, H, W} for images.
struct Dataset {
    Shape sample_shape;
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t num_classes = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t sample_size() const { return shape_numel(sample_shape); }
    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * sample_size(), sample_size()};
    }

    Dataset subset(std::span<const std::size_t> indices) const;
    /// Gathers rows into a [B, sample_shape...] tensor.
    Tensor batch(std::span<const std::size_t> indices) const;
    Tensor all_features() const;
    std::vector<int> batch_labels(std::span<const std::size_t> indices) const;

    /// Throws DataError on empty set, out-of-range labels or non-finite features.
    void validate() const;
};

/// One client's shard; the same representation as any other dataset.
using ClientDataset = Dataset;

enum class LayerKind { FullyConnected, Convolutional };
enum class Activation { ReLU, Identity };

/// Fully-connected weights are [F_out, F_in]. Convolutional weights are
/// [C_out, C_in, K, K] with stride 1, same zero padding, ReLU and a 2x2 max-pool.
struct LayerParams {
    LayerKind kind = LayerKind::FullyConnected;
    Activation activation = Activation::ReLU;
    Tensor weight;
    Tensor bias;

    std::size_t output_size() const { return weight.dim(0); }

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Parameters are exposed as ordered groups: weight of layer 0, bias of layer 0,
/// weight of layer 1, ... Only weight groups count towards the layer count L.
struct ModelParams {
    Shape input_shape;
    std::vector<LayerParams> layers;

    std::size_t layer_count() const noexcept { return layers.size(); }
    std::size_t group_count() const noexcept { return 2 * layers.size(); }
    static constexpr bool is_weight_group(std::size_t g) noexcept { return g % 2 == 0; }
    static constexpr std::size_t layer_of_group(std::size_t g) noexcept { return g / 2; }

    Tensor& group(std::size_t g) { return g % 2 == 0 ? layers.at(g / 2).weight : layers.at(g / 2).bias; }
    const Tensor& group(std::size_t g) const {
        return g % 2 == 0 ? layers.at(g / 2).weight : layers.at(g / 2).bias;
    }

    ParamGroups groups() const;
    void set_groups(const ParamGroups& values);
    /// this += scale * delta, group by group.
    void add(const ParamGroups& delta, double scale = 1.0);

    std::size_t num_classes() const { return layers.back().output_size(); }
    std::size_t parameter_count() const;

    /// Checks that layer shapes compose; throws ConfigError naming the first bad layer.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

ParamGroups zeros_like(const ModelParams& model);
/// a - b per group.
ParamGroups difference(const ModelParams& a, const ModelParams& b);

enum class ArchKind { Linear, Mlp, Cnn };

struct ArchSpec {
    ArchKind kind = ArchKind::Mlp;
    /// Linear / MLP: [input_dim, hidden..., num_classes].
    std::vector<std::size_t> widths;
    // CNN geometry.
    std::size_t in_channels = 1;
    std::size_t height = 28;
    std::size_t width = 28;
    std::size_t kernel = 5;
    std::vector<std::size_t> conv_channels{32, 64};
    std::vector<std::size_t> fc_hidden{512};
    std::size_t num_classes = 10;
};

std::string to_string(ArchKind kind);
ArchKind parse_arch_kind(const std::string& name);

/// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ModelParams build_model(const ArchSpec& spec, std::uint64_t seed);

/// batch is [B, input_shape...] (or [B, prod(input_shape)]). Returns logits [B, classes].
Tensor forward(const ModelParams& model, const Tensor& batch);

/// Per-layer outputs (after activation and pooling), each flattened to [B, features].
std::vector<Tensor> forward_trace(const ModelParams& model, const Tensor& batch);

struct ProxTerm {
    double mu = 0.0;
    const ModelParams* anchor = nullptr;
};

struct LossAndGrad {
    double loss = 0.0;
    ParamGroups grads;
};

/// Mean cross-entropy over the batch, plus mu/2 * ||w - anchor||^2 when a
/// proximal term is given, with exact analytic gradients.
LossAndGrad loss_and_grad(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                          std::optional<ProxTerm> prox = std::nullopt);

double loss_only(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                 std::optional<ProxTerm> prox = std::nullopt);

/// Central differences of an arbitrary scalar function of parameter groups.
ParamGroups finite_diff_grad(const std::function<double(const ParamGroups&)>& loss, ParamGroups point,
                             double eps);

ParamGroups finite_diff_grad(const ModelParams& model, const Tensor& batch, std::span<const int> labels,
                             double eps);

struct OptimizerState {
    ParamGroups velocity;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-5;
};

/// g <- g + wd * w;  v <- m * v + g;  w <- w - lr * v.
void sgd_step(ModelParams& model, const ParamGroups& grads, OptimizerState& state);

}  // namespace gcfed
