#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "neurotopo/nn/layers.hpp"
#include "neurotopo/nn/tensor.hpp"
#include "neurotopo/util/io.hpp"
#include "neurotopo/util/rng.hpp"

namespace neurotopo::nn {

struct ModelConfig {
  int input_channels = 0;
  int input_height = 0;
  int input_width = 0;
  std::vector<LayerSpec> layers;
};

namespace detail {

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

[[noreturn]] inline void config_error(std::size_t layer, const LayerSpec& spec,
                                      const std::string& what) {
  throw std::invalid_argument("layer " + std::to_string(layer) + " (" +
                              layer_name(spec) + "): " + what);
}

}  // namespace detail

// Walks the layer stack and returns the per-sample shape after each layer;
// result[0] is the input shape {C,H,W}. Throws on any inconsistency.
inline std::vector<std::vector<std::size_t>> infer_shapes(const ModelConfig& cfg) {
  if (cfg.input_channels < 1 || cfg.input_height < 1 || cfg.input_width < 1)
    throw std::invalid_argument("model input dimensions must be positive");
  if (cfg.layers.empty()) throw std::invalid_argument("model has no layers");

  std::vector<std::vector<std::size_t>> shapes;
  shapes.push_back({static_cast<std::size_t>(cfg.input_channels),
                    static_cast<std::size_t>(cfg.input_height),
                    static_cast<std::size_t>(cfg.input_width)});

  for (std::size_t li = 0; li < cfg.layers.size(); ++li) {
    const LayerSpec& spec = cfg.layers[li];
    const std::vector<std::size_t>& in = shapes.back();
    std::vector<std::size_t> out;

    if (const auto* c = std::get_if<Conv2dSpec>(&spec)) {
      if (in.size() != 3)
        detail::config_error(li, spec, "expects [C,H,W] input, got " + detail::shape_str(in));
      if (c->filters < 1 || c->kernel < 1 || c->stride < 1 || c->pad < 0)
        detail::config_error(li, spec, "invalid filters/kernel/stride/pad");
      const long H = static_cast<long>(in[1]), W = static_cast<long>(in[2]);
      const long oh = (H + 2L * c->pad - c->kernel) / c->stride + 1;
      const long ow = (W + 2L * c->pad - c->kernel) / c->stride + 1;
      if (H + 2L * c->pad < c->kernel || W + 2L * c->pad < c->kernel || oh < 1 || ow < 1)
        detail::config_error(li, spec, "kernel " + std::to_string(c->kernel) +
                                           " does not fit input " + detail::shape_str(in));
      out = {static_cast<std::size_t>(c->filters), static_cast<std::size_t>(oh),
             static_cast<std::size_t>(ow)};
    } else if (std::holds_alternative<ReluSpec>(spec)) {
      out = in;
    } else if (const auto* p = std::get_if<MaxPool2dSpec>(&spec)) {
      if (in.size() != 3)
        detail::config_error(li, spec, "expects [C,H,W] input, got " + detail::shape_str(in));
      if (p->size < 1) detail::config_error(li, spec, "invalid window size");
      const std::size_t oh = in[1] / p->size, ow = in[2] / p->size;
      if (oh < 1 || ow < 1)
        detail::config_error(li, spec, "window " + std::to_string(p->size) +
                                           " larger than input " + detail::shape_str(in));
      out = {in[0], oh, ow};
    } else if (std::holds_alternative<FlattenSpec>(spec)) {
      std::size_t d = 1;
      for (std::size_t v : in) d *= v;
      out = {d};
    } else if (const auto* dn = std::get_if<DenseSpec>(&spec)) {
      if (in.size() != 1)
        detail::config_error(li, spec, "expects flat input, got " + detail::shape_str(in) +
                                           " (missing flatten?)");
      if (dn->units < 1) detail::config_error(li, spec, "invalid unit count");
      out = {static_cast<std::size_t>(dn->units)};
    } else if (std::holds_alternative<SoftmaxSpec>(spec)) {
      if (in.size() != 1)
        detail::config_error(li, spec, "expects flat input, got " + detail::shape_str(in));
      if (li + 1 != cfg.layers.size())
        detail::config_error(li, spec, "must be the final layer");
      out = in;
    }
    shapes.push_back(std::move(out));
  }

  if (!std::holds_alternative<SoftmaxSpec>(cfg.layers.back()))
    throw std::invalid_argument("model must end with a softmax layer");
  return shapes;
}

inline std::size_t num_classes(const ModelConfig& cfg) {
  return infer_shapes(cfg).back()[0];
}

// Conv stack used by the classification experiments.
inline ModelConfig default_classifier_config(int bands, int height, int width,
                                             int classes) {
  ModelConfig cfg;
  cfg.input_channels = bands;
  cfg.input_height = height;
  cfg.input_width = width;
  cfg.layers = {Conv2dSpec{32, 3, 1, 1}, ReluSpec{}, Conv2dSpec{32, 3, 1, 1},
                ReluSpec{},              MaxPool2dSpec{2}, FlattenSpec{},
                DenseSpec{128},          ReluSpec{},       DenseSpec{classes},
                SoftmaxSpec{}};
  return cfg;
}

// Per-batch activation and scratch storage, reusable across forward calls.
struct ForwardPass {
  std::vector<Tensor> acts;    // acts[0] = input, acts[i+1] = layer i output
  std::vector<Tensor> dacts;   // gradients wrt acts, filled by backward
  std::vector<std::vector<std::size_t>> pool_argmax;  // per layer, pools only
  std::vector<double> col, scratch;
  std::size_t batch = 0;
  std::uint64_t revision = ~0ull;  // model revision the cache was built against
};

struct Gradients {
  std::vector<Tensor> w, b;  // indexed by layer; empty for parameter-free layers
};

class Model {
 public:
  Model() = default;

  explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)), shapes_(infer_shapes(cfg_)) {
    w_.resize(cfg_.layers.size());
    b_.resize(cfg_.layers.size());
    for (std::size_t li = 0; li < cfg_.layers.size(); ++li) {
      if (const auto* c = std::get_if<Conv2dSpec>(&cfg_.layers[li])) {
        const std::size_t ckk = shapes_[li][0] * c->kernel * c->kernel;
        w_[li] = Tensor({static_cast<std::size_t>(c->filters), ckk});
        b_[li] = Tensor({static_cast<std::size_t>(c->filters)});
      } else if (const auto* d = std::get_if<DenseSpec>(&cfg_.layers[li])) {
        w_[li] = Tensor({static_cast<std::size_t>(d->units), shapes_[li][0]});
        b_[li] = Tensor({static_cast<std::size_t>(d->units)});
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t classes() const { return shapes_.back()[0]; }

  // Bumped on every re-init or checkpoint load so optimizer state tied to an
  // older parameter set can detect it has gone stale.
  std::uint64_t revision() const { return revision_; }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t li = 0; li < w_.size(); ++li) n += w_[li].numel() + b_[li].numel();
    return n;
  }

  // He-uniform fan-in initialization; biases start at zero.
  void init_params(Rng& rng) {
    for (std::size_t li = 0; li < w_.size(); ++li) {
      if (w_[li].numel() == 0) continue;
      const std::size_t fan_in = w_[li].dim(1);
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (double& v : w_[li].data) v = rng.uniform(-limit, limit);
      std::fill(b_[li].data.begin(), b_[li].data.end(), 0.0);
    }
    ++revision_;
  }

  std::vector<Tensor>& weights() { return w_; }
  std::vector<Tensor>& biases() { return b_; }
  const std::vector<Tensor>& weights() const { return w_; }
  const std::vector<Tensor>& biases() const { return b_; }

  // x is [N, C, H, W]; returns the softmax output [N, classes].
  const Tensor& forward(const Tensor& x, ForwardPass& fp) const {
    if (x.shape.size() != 4 || x.dim(1) != shapes_[0][0] ||
        x.dim(2) != shapes_[0][1] || x.dim(3) != shapes_[0][2])
      throw std::invalid_argument("model input must be [N," +
                                  detail::shape_str(shapes_[0]).substr(1) +
                                  ", got " + x.shape_string());
    const std::size_t N = x.dim(0);
    const std::size_t L = cfg_.layers.size();
    fp.batch = N;
    fp.revision = revision_;
    fp.acts.resize(L + 1);
    fp.dacts.resize(L + 1);
    fp.pool_argmax.resize(L);
    fp.acts[0] = x;

    for (std::size_t li = 0; li < L; ++li) {
      std::vector<std::size_t> out_shape = shapes_[li + 1];
      out_shape.insert(out_shape.begin(), N);
      fp.acts[li + 1].resize(out_shape);
      const Tensor& in = fp.acts[li];
      Tensor& out = fp.acts[li + 1];

      if (const auto* c = std::get_if<Conv2dSpec>(&cfg_.layers[li])) {
        conv2d_forward(in, w_[li], b_[li], *c, static_cast<int>(shapes_[li + 1][1]),
                       static_cast<int>(shapes_[li + 1][2]), out, fp.col, fp.scratch);
      } else if (std::holds_alternative<ReluSpec>(cfg_.layers[li])) {
        relu_forward(in, out);
      } else if (const auto* p = std::get_if<MaxPool2dSpec>(&cfg_.layers[li])) {
        maxpool_forward(in, *p, out, fp.pool_argmax[li]);
      } else if (std::holds_alternative<FlattenSpec>(cfg_.layers[li])) {
        out.data = in.data;  // same storage order, new shape
      } else if (std::holds_alternative<DenseSpec>(cfg_.layers[li])) {
        dense_forward(in, w_[li], b_[li], out);
      } else {
        softmax_forward(in, out);
      }
    }
    return fp.acts[L];
  }

  // Cross-entropy loss against integer labels plus parameter gradients.
  // forward() must have been called on fp with the matching batch.
  double backward(ForwardPass& fp, const std::vector<int>& labels,
                  Gradients& g) const {
    const std::size_t L = cfg_.layers.size();
    const std::size_t N = fp.batch;
    const std::size_t C = classes();
    if (fp.acts.size() != L + 1 || N == 0)
      throw std::logic_error("backward called without a forward pass");
    if (fp.revision != revision_)
      throw std::logic_error(
          "stale forward cache: parameters were replaced after forward()");
    if (labels.size() != N)
      throw std::invalid_argument("label count does not match batch size");

    g.w.resize(L);
    g.b.resize(L);
    for (std::size_t li = 0; li < L; ++li) {
      g.w[li].resize(w_[li].shape);
      g.b[li].resize(b_[li].shape);
    }

    const Tensor& probs = fp.acts[L];
    double loss = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= C)
        throw std::invalid_argument("label " + std::to_string(labels[n]) +
                                    " out of range for " + std::to_string(C) +
                                    " classes");
      loss -= std::log(std::max(probs.data[n * C + labels[n]], 1e-300));
    }
    loss /= static_cast<double>(N);

    // softmax + cross-entropy combine into (p - onehot)/N at the logits
    fp.dacts[L - 1].resize(fp.acts[L - 1].shape);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        fp.dacts[L - 1].data[n * C + c] =
            (probs.data[n * C + c] - (static_cast<std::size_t>(labels[n]) == c ? 1.0 : 0.0)) /
            static_cast<double>(N);

    for (std::size_t li = L - 1; li-- > 0;) {
      const std::size_t out_i = li + 1;  // layer li maps acts[li] -> acts[li+1]
      const Tensor& dout = fp.dacts[out_i];
      fp.dacts[li].resize(fp.acts[li].shape);
      Tensor& dx = fp.dacts[li];

      if (const auto* c = std::get_if<Conv2dSpec>(&cfg_.layers[li])) {
        conv2d_backward(fp.acts[li], w_[li], *c, static_cast<int>(shapes_[li + 1][1]),
                        static_cast<int>(shapes_[li + 1][2]), dout, g.w[li], g.b[li],
                        dx, fp.col, fp.scratch);
      } else if (std::holds_alternative<ReluSpec>(cfg_.layers[li])) {
        relu_backward(fp.acts[li], dout, dx);
      } else if (std::holds_alternative<MaxPool2dSpec>(cfg_.layers[li])) {
        maxpool_backward(dout, fp.pool_argmax[li], dx);
      } else if (std::holds_alternative<FlattenSpec>(cfg_.layers[li])) {
        dx.data = dout.data;
      } else if (std::holds_alternative<DenseSpec>(cfg_.layers[li])) {
        dense_backward(fp.acts[li], w_[li], dout, g.w[li], g.b[li], dx);
      }
      // softmax never appears here: its gradient was folded into dacts[L-1]
    }
    return loss;
  }

  // Argmax class per sample; ties resolve to the lowest index.
  std::vector<int> predict(const Tensor& x, ForwardPass& fp) const {
    const Tensor& probs = forward(x, fp);
    const std::size_t N = probs.dim(0), C = probs.dim(1);
    std::vector<int> out(N);
    for (std::size_t n = 0; n < N; ++n) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < C; ++c)
        if (probs.data[n * C + c] > probs.data[n * C + best]) best = c;
      out[n] = static_cast<int>(best);
    }
    return out;
  }

  void bump_revision() { ++revision_; }

 private:
  ModelConfig cfg_;
  std::vector<std::vector<std::size_t>> shapes_;
  std::vector<Tensor> w_, b_;
  std::uint64_t revision_ = 0;
};

// --- config JSON (used by checkpoints and run manifests) ---

inline nlohmann::json layer_to_json(const LayerSpec& spec) {
  nlohmann::json j;
  j["type"] = layer_name(spec);
  if (const auto* c = std::get_if<Conv2dSpec>(&spec)) {
    j["filters"] = c->filters;
    j["kernel"] = c->kernel;
    j["stride"] = c->stride;
    j["pad"] = c->pad;
  } else if (const auto* p = std::get_if<MaxPool2dSpec>(&spec)) {
    j["size"] = p->size;
  } else if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    j["units"] = d->units;
  }
  return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "conv2d")
    return Conv2dSpec{j.at("filters").get<int>(), j.at("kernel").get<int>(),
                      j.at("stride").get<int>(), j.at("pad").get<int>()};
  if (type == "relu") return ReluSpec{};
  if (type == "maxpool2d") return MaxPool2dSpec{j.at("size").get<int>()};
  if (type == "flatten") return FlattenSpec{};
  if (type == "dense") return DenseSpec{j.at("units").get<int>()};
  if (type == "softmax") return SoftmaxSpec{};
  throw std::invalid_argument("unknown layer type \"" + type + "\"");
}

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["input"] = {cfg.input_channels, cfg.input_height, cfg.input_width};
  j["layers"] = nlohmann::json::array();
  for (const LayerSpec& s : cfg.layers) j["layers"].push_back(layer_to_json(s));
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  const auto& in = j.at("input");
  cfg.input_channels = in.at(0).get<int>();
  cfg.input_height = in.at(1).get<int>();
  cfg.input_width = in.at(2).get<int>();
  for (const auto& l : j.at("layers")) cfg.layers.push_back(layer_from_json(l));
  return cfg;
}

// --- checkpoints: magic, version, config JSON, then raw f64 parameter blocks ---

inline constexpr char kCheckpointMagic[4] = {'N', 'T', 'M', 'D'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline void save_checkpoint(const Model& model, const std::string& path) {
  io::ByteWriter wtr;
  wtr.raw(kCheckpointMagic, 4);
  wtr.u16(kCheckpointVersion);
  const std::string cfg = config_to_json(model.config()).dump();
  wtr.u32(static_cast<std::uint32_t>(cfg.size()));
  wtr.text(cfg);
  std::uint32_t n_tensors = 0;
  for (std::size_t li = 0; li < model.weights().size(); ++li)
    if (model.weights()[li].numel() > 0) n_tensors += 2;
  wtr.u32(n_tensors);
  for (std::size_t li = 0; li < model.weights().size(); ++li) {
    if (model.weights()[li].numel() == 0) continue;
    for (const Tensor* t : {&model.weights()[li], &model.biases()[li]}) {
      wtr.u64(t->numel());
      for (double v : t->data) wtr.f64(v);
    }
  }
  io::write_file_atomic(path, wtr.bytes);
}

inline Model load_checkpoint(const std::string& path) {
  const std::vector<std::uint8_t> raw = io::read_file(path);
  io::ByteReader rdr(raw, path);
  char magic[4];
  rdr.raw(magic, 4, "magic");
  if (std::string(magic, 4) != std::string(kCheckpointMagic, 4))
    throw std::runtime_error(path + ": not a model checkpoint");
  const std::uint16_t version = rdr.u16("version");
  if (version != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  const std::uint32_t cfg_len = rdr.u32("config length");
  std::string cfg_text(cfg_len, '\0');
  rdr.raw(cfg_text.data(), cfg_len, "config");
  Model model(config_from_json(nlohmann::json::parse(cfg_text)));

  const std::uint32_t n_tensors = rdr.u32("tensor count");
  std::uint32_t expected = 0;
  for (std::size_t li = 0; li < model.weights().size(); ++li)
    if (model.weights()[li].numel() > 0) expected += 2;
  if (n_tensors != expected)
    throw std::runtime_error(path + ": checkpoint holds " + std::to_string(n_tensors) +
                             " tensors, model needs " + std::to_string(expected));
  for (std::size_t li = 0; li < model.weights().size(); ++li) {
    if (model.weights()[li].numel() == 0) continue;
    for (Tensor* t : {&model.weights()[li], &model.biases()[li]}) {
      const std::uint64_t count = rdr.u64("tensor size");
      if (count != t->numel())
        throw std::runtime_error(path + ": tensor size mismatch at layer " +
                                 std::to_string(li));
      for (double& v : t->data) v = rdr.f64("tensor data");
    }
  }
  model.bump_revision();
  return model;
}

}  // namespace neurotopo::nn
