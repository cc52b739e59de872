#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurotopo/nn/model.hpp"
#include "neurotopo/nn/tensor.hpp"
#include "neurotopo/util/rng.hpp"

namespace neurotopo::nn {

enum class Optimizer { kAdam, kSgd };

inline const char* optimizer_name(Optimizer o) {
  return o == Optimizer::kAdam ? "adam" : "sgd";
}

inline Optimizer optimizer_from_name(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "sgd") return Optimizer::kSgd;
  throw std::invalid_argument("unknown optimizer \"" + name + "\" (adam|sgd)");
}

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  double divergence_threshold = 1e6;  // batch loss above this aborts
  std::uint64_t seed = 0;
};

// Thrown when a batch loss goes non-finite or past the divergence threshold.
struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // sample-weighted mean loss per epoch
};

// Adam moment buffers, one pair per parameter tensor, bound to a model
// revision so a re-initialized model cannot silently reuse stale moments.
class AdamState {
 public:
  void bind(const Model& model) {
    revision_ = model.revision();
    step_ = 0;
    m_.clear();
    v_.clear();
    for (const std::vector<Tensor>* group : {&model.weights(), &model.biases()})
      for (const Tensor& t : *group) {
        m_.emplace_back(t.numel(), 0.0);
        v_.emplace_back(t.numel(), 0.0);
      }
  }

  void apply(Model& model, const Gradients& g, double lr) {
    if (revision_ != model.revision())
      throw std::logic_error("optimizer state is stale: model was re-initialized");
    ++step_;
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    std::size_t slot = 0;
    const std::size_t L = model.weights().size();
    for (std::size_t gi = 0; gi < 2; ++gi) {
      std::vector<Tensor>& params = gi == 0 ? model.weights() : model.biases();
      const std::vector<Tensor>& grads = gi == 0 ? g.w : g.b;
      for (std::size_t li = 0; li < L; ++li, ++slot) {
        std::vector<double>& m = m_[slot];
        std::vector<double>& v = v_[slot];
        Tensor& p = params[li];
        const Tensor& d = grads[li];
        for (std::size_t i = 0; i < p.numel(); ++i) {
          m[i] = b1 * m[i] + (1.0 - b1) * d.data[i];
          v[i] = b2 * v[i] + (1.0 - b2) * d.data[i] * d.data[i];
          p.data[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
        }
      }
    }
  }

 private:
  std::uint64_t revision_ = ~0ull;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline void sgd_apply(Model& model, const Gradients& g, double lr) {
  const std::size_t L = model.weights().size();
  for (std::size_t li = 0; li < L; ++li) {
    for (std::size_t i = 0; i < model.weights()[li].numel(); ++i)
      model.weights()[li].data[i] -= lr * g.w[li].data[i];
    for (std::size_t i = 0; i < model.biases()[li].numel(); ++i)
      model.biases()[li].data[i] -= lr * g.b[li].data[i];
  }
}

namespace detail {

inline void gather_batch(const Tensor& x, const std::vector<int>& y,
                         const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t end, Tensor& xb,
                         std::vector<int>& yb) {
  const std::size_t sample = x.numel() / x.dim(0);
  std::vector<std::size_t> shape = x.shape;
  shape[0] = end - begin;
  xb.resize(shape);
  yb.resize(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t src = order[i];
    std::copy(x.ptr() + src * sample, x.ptr() + (src + 1) * sample,
              xb.ptr() + (i - begin) * sample);
    yb[i - begin] = y[src];
  }
}

}  // namespace detail

// Minibatch training over x [N,C,H,W] / integer labels. Parameters must
// already be initialized; cfg.seed drives only the epoch shuffles, so the
// full run is reproducible from (init rng, cfg). Throws TrainingDivergence
// when a batch loss goes non-finite or crosses the threshold.
inline TrainResult train_model(Model& model, const Tensor& x,
                               const std::vector<int>& y,
                               const TrainConfig& cfg) {
  if (x.shape.size() != 4)
    throw std::invalid_argument("training input must be [N,C,H,W], got " +
                                x.shape_string());
  const std::size_t N = x.dim(0);
  if (N == 0) throw std::invalid_argument("training set is empty");
  if (y.size() != N)
    throw std::invalid_argument("training labels do not match sample count");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate < 0.0)
    throw std::invalid_argument("invalid training configuration");

  Rng shuffle_rng(derive_seed(cfg.seed, 0x5348464cull));  // shuffle stream
  AdamState adam;
  if (cfg.optimizer == Optimizer::kAdam) adam.bind(model);

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});

  ForwardPass fp;
  Gradients grads;
  Tensor xb;
  std::vector<int> yb;
  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = shuffle_rng.fork(static_cast<std::uint64_t>(epoch));
    erng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < N;
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(N, begin + static_cast<std::size_t>(cfg.batch_size));
      detail::gather_batch(x, y, order, begin, end, xb, yb);
      model.forward(xb, fp);
      const double loss = model.backward(fp, yb, grads);
      if (!std::isfinite(loss) || loss > cfg.divergence_threshold)
        throw TrainingDivergence(
            "training diverged at epoch " + std::to_string(epoch) + ": loss " +
            (std::isfinite(loss) ? std::to_string(loss) : "is not finite"));
      if (cfg.optimizer == Optimizer::kAdam)
        adam.apply(model, grads, cfg.learning_rate);
      else
        sgd_apply(model, grads, cfg.learning_rate);
      loss_sum += loss * static_cast<double>(end - begin);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(N));
  }
  return result;
}

}  // namespace neurotopo::nn
