#include "pgat/model.hpp"

#include <cmath>
#include <sstream>

#include "pgat/errors.hpp"
#include "pgat/ops.hpp"
#include "pgat/rng.hpp"

namespace pgat {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::size_t parse_size(const std::string& s, const std::string& ctx) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("model descriptor: expected a non-negative integer in '" + ctx + "', got '" + s + "'");
  }
  return std::stoull(s);
}

Shape parse_shape(const std::string& s) {
  Shape shape;
  for (const auto& part : split(s, 'x')) shape.push_back(parse_size(part, s));
  if (shape.empty()) throw ConfigError("model descriptor: empty input shape");
  return shape;
}

}  // namespace

ModelDescriptor ModelDescriptor::mlp(Shape input, std::size_t hidden, std::size_t classes) {
  ModelDescriptor d;
  d.input = std::move(input);
  if (d.input.size() > 1) d.layers.push_back({LayerKind::kFlatten});
  d.layers.push_back({LayerKind::kLinear, hidden});
  d.layers.push_back({LayerKind::kRelu});
  d.layers.push_back({LayerKind::kLinear, hidden});
  d.layers.push_back({LayerKind::kRelu});
  d.layers.push_back({LayerKind::kLinear, classes});
  return d;
}

ModelDescriptor ModelDescriptor::small_cnn(Shape input, std::size_t classes) {
  ModelDescriptor d;
  d.input = std::move(input);
  d.layers = {
      {LayerKind::kConv2d, 16, 4, 2, 1}, {LayerKind::kRelu},          {LayerKind::kConv2d, 32, 4, 2, 1},
      {LayerKind::kRelu},                {LayerKind::kFlatten},       {LayerKind::kLinear, 100},
      {LayerKind::kRelu},                {LayerKind::kLinear, classes},
  };
  return d;
}

ModelDescriptor ModelDescriptor::parse(const std::string& text, const Shape& input, std::size_t classes) {
  std::istringstream is(text);
  std::vector<std::string> tokens;
  for (std::string tok; is >> tok;) tokens.push_back(tok);
  if (tokens.empty()) throw ConfigError("model descriptor is empty");

  const std::string& head = tokens[0];
  if (head == "smallcnn" || head.rfind("mlp", 0) == 0) {
    if (tokens.size() != 1) throw ConfigError("model preset '" + head + "' takes no further tokens");
    if (input.empty() || classes < 2) throw ConfigError("model preset '" + head + "' needs input shape and classes");
    if (head == "smallcnn") {
      if (input.size() != 3) throw ConfigError("smallcnn needs image input [C,H,W], got " + shape_string(input));
      return small_cnn(input, classes);
    }
    std::size_t hidden = 256;
    if (head != "mlp") {
      if (head.size() < 5 || head[3] != ':') throw ConfigError("unknown model preset '" + head + "'");
      hidden = parse_size(head.substr(4), head);
    }
    return mlp(input, hidden, classes);
  }

  ModelDescriptor d;
  for (const auto& tok : tokens) {
    auto parts = split(tok, ':');
    const std::string& kind = parts[0];
    if (tok.rfind("input=", 0) == 0) {
      d.input = parse_shape(tok.substr(6));
    } else if (kind == "relu" && parts.size() == 1) {
      d.layers.push_back({LayerKind::kRelu});
    } else if (kind == "flatten" && parts.size() == 1) {
      d.layers.push_back({LayerKind::kFlatten});
    } else if (kind == "linear" && parts.size() == 2) {
      d.layers.push_back({LayerKind::kLinear, parse_size(parts[1], tok)});
    } else if (kind == "conv" && parts.size() == 5) {
      d.layers.push_back({LayerKind::kConv2d, parse_size(parts[1], tok), parse_size(parts[2], tok),
                          parse_size(parts[3], tok), parse_size(parts[4], tok)});
    } else {
      throw ConfigError("model descriptor: unknown layer '" + tok + "'");
    }
  }
  if (d.input.empty()) throw ConfigError("model descriptor: missing input=CxHxW");
  d.parameter_shapes();
  return d;
}

std::string ModelDescriptor::to_string() const {
  std::ostringstream os;
  os << "input=";
  for (std::size_t i = 0; i < input.size(); ++i) os << (i ? "x" : "") << input[i];
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerKind::kRelu: os << " relu"; break;
      case LayerKind::kFlatten: os << " flatten"; break;
      case LayerKind::kLinear: os << " linear:" << l.out; break;
      case LayerKind::kConv2d:
        os << " conv:" << l.out << ':' << l.kernel << ':' << l.stride << ':' << l.padding;
        break;
    }
  }
  return os.str();
}

std::vector<Shape> ModelDescriptor::parameter_shapes() const {
  if (layers.empty()) throw ConfigError("model descriptor has no layers");
  if (input.empty()) throw ConfigError("model descriptor has no input shape");
  for (std::size_t d : input)
    if (d == 0) throw ConfigError("model descriptor input " + shape_string(input) + " has a zero extent");

  std::vector<Shape> shapes;
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.kind) {
      case LayerKind::kRelu: break;
      case LayerKind::kFlatten: cur = {shape_numel(cur)}; break;
      case LayerKind::kLinear:
        if (cur.size() != 1) throw ConfigError(where + ": linear needs flat input, got " + shape_string(cur));
        if (l.out == 0) throw ConfigError(where + ": linear width must be positive");
        shapes.push_back({cur[0], l.out});
        shapes.push_back({l.out});
        cur = {l.out};
        break;
      case LayerKind::kConv2d: {
        if (cur.size() != 3) throw ConfigError(where + ": conv needs [C,H,W] input, got " + shape_string(cur));
        if (l.out == 0 || l.kernel == 0) throw ConfigError(where + ": conv filters and kernel must be positive");
        const std::size_t h = ops::conv_output_size(cur[1], l.kernel, l.stride, l.padding);
        const std::size_t w = ops::conv_output_size(cur[2], l.kernel, l.stride, l.padding);
        shapes.push_back({l.out, cur[0], l.kernel, l.kernel});
        shapes.push_back({l.out});
        cur = {l.out, h, w};
        break;
      }
    }
  }
  if (layers.back().kind != LayerKind::kLinear) throw ConfigError("model descriptor must end with a linear layer");
  if (cur[0] < 2) throw ConfigError("model descriptor must produce at least 2 classes");
  return shapes;
}

std::size_t ModelDescriptor::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : parameter_shapes()) n += shape_numel(s);
  return n;
}

std::size_t ModelDescriptor::num_classes() const {
  parameter_shapes();
  return layers.back().out;
}

Model::Model(ModelDescriptor descriptor, std::vector<Tensor> params)
    : descriptor_(std::move(descriptor)), params_(std::move(params)) {
  const auto shapes = descriptor_.parameter_shapes();
  if (shapes.size() != params_.size()) {
    throw DimensionError("model expects " + std::to_string(shapes.size()) + " parameter tensors, got " +
                         std::to_string(params_.size()));
  }
  std::size_t p = 0;
  for (std::size_t i = 0; i < descriptor_.layers.size(); ++i) {
    const LayerKind k = descriptor_.layers[i].kind;
    if (k != LayerKind::kLinear && k != LayerKind::kConv2d) continue;
    names_.push_back("layer" + std::to_string(i) + ".weight");
    names_.push_back("layer" + std::to_string(i) + ".bias");
    for (int j = 0; j < 2; ++j, ++p) {
      if (params_[p].shape() != shapes[p]) {
        throw DimensionError(names_[p] + ": expected " + shape_string(shapes[p]) + ", got " +
                             shape_string(params_[p].shape()));
      }
    }
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += t.numel();
  return n;
}

std::vector<Var> Model::bind(Graph& g, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& t : params_) vars.push_back(g.input(t, requires_grad));
  return vars;
}

Var Model::forward(Var x, std::span<const Var> bound) const {
  if (bound.size() != params_.size()) throw UsageError("forward: parameters not bound to this graph");
  Shape expected = descriptor_.input;
  expected.insert(expected.begin(), x.value().dim(0));
  if (x.shape() != expected) {
    throw DimensionError("model input " + shape_string(x.shape()) + " does not match descriptor " +
                         shape_string(descriptor_.input));
  }
  Var h = x;
  std::size_t p = 0;
  for (const auto& l : descriptor_.layers) {
    switch (l.kind) {
      case LayerKind::kRelu: h = ops::relu(h); break;
      case LayerKind::kFlatten: h = ops::flatten(h); break;
      case LayerKind::kLinear:
        h = ops::linear(h, bound[p], bound[p + 1]);
        p += 2;
        break;
      case LayerKind::kConv2d:
        h = ops::conv2d(h, bound[p], bound[p + 1], {l.stride, l.padding});
        p += 2;
        break;
    }
  }
  return h;
}

Tensor Model::logits(const Tensor& x) const {
  Graph g;
  auto params = bind(g, false);
  return forward(g.input(x), params).value();
}

Model init_model(const ModelDescriptor& descriptor, std::uint64_t seed) {
  const auto shapes = descriptor.parameter_shapes();
  Rng rng = Rng::derive(seed, {stream::kInit});
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Tensor t(shapes[i]);
    if (i % 2 == 0) {
      // Linear weights are [I,O]; conv weights are [F,C,Kh,Kw].
      const std::size_t fan_in = shapes[i].size() == 2 ? shapes[i][0] : t.numel() / shapes[i][0];
      const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (Real& v : t.data()) v = static_cast<Real>(std * rng.normal());
    }
    params.push_back(std::move(t));
  }
  return Model(descriptor, std::move(params));
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows needs [B,K], got " + shape_string(logits.shape()));
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  std::vector<int> out(B);
  for (std::size_t n = 0; n < B; ++n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (logits[n * K + k] > logits[n * K + best]) best = k;
    out[n] = static_cast<int>(best);
  }
  return out;
}

}  // namespace pgat
