#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pgat/graph.hpp"
#include "pgat/tensor.hpp"

namespace pgat {

enum class LayerKind { kLinear, kConv2d, kRelu, kFlatten };

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t out = 0;  // linear width or conv filters
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Architecture of a feed-forward classifier over inputs of shape [C,H,W] or [D].
///
/// Textual form (used in configs and checkpoints):
///   input=1x28x28 conv:16:4:2:1 relu conv:32:4:2:1 relu flatten linear:100 relu linear:10
/// where conv:F:K:S:P is F filters of KxK, stride S, padding P.
struct ModelDescriptor {
  Shape input;
  std::vector<LayerSpec> layers;

  /// Two hidden ReLU layers of width `hidden`.
  static ModelDescriptor mlp(Shape input, std::size_t hidden, std::size_t classes);
  /// Two strided 4x4 convs (16, 32 filters) followed by fc(100) and the classifier.
  static ModelDescriptor small_cnn(Shape input, std::size_t classes);

  /// Accepts the textual form above, or the presets "mlp[:hidden]" / "smallcnn"
  /// which need `input` and `classes` from the caller.
  static ModelDescriptor parse(const std::string& text, const Shape& input = {}, std::size_t classes = 0);

  std::string to_string() const;

  /// Validates the layer chain and returns the parameter shapes in order
  /// (weight then bias per parametrised layer).
  std::vector<Shape> parameter_shapes() const;
  std::size_t parameter_count() const;
  std::size_t num_classes() const;

  friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

class Model {
 public:
  /// Adopts `params`; their shapes must match the descriptor.
  Model(ModelDescriptor descriptor, std::vector<Tensor> params);

  const ModelDescriptor& descriptor() const { return descriptor_; }
  std::span<const Tensor> params() const { return params_; }
  std::span<Tensor> params() { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }
  std::size_t parameter_count() const;

  /// Adds every parameter to `g` as a leaf.
  std::vector<Var> bind(Graph& g, bool requires_grad) const;

  /// Logits for a batch x[B, input...] using parameters previously bound to the same graph.
  Var forward(Var x, std::span<const Var> bound) const;

  /// Inference-only logits.
  Tensor logits(const Tensor& x) const;

  friend bool operator==(const Model& a, const Model& b) {
    return a.descriptor_ == b.descriptor_ && a.params_ == b.params_;
  }

 private:
  ModelDescriptor descriptor_;
  std::vector<Tensor> params_;
  std::vector<std::string> names_;
};

/// Kaiming fan-in normal weights (std = sqrt(2 / fan_in)), zero biases.
Model init_model(const ModelDescriptor& descriptor, std::uint64_t seed);

/// Class with the largest logit per row (lowest index wins ties).
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace pgat
