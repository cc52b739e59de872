#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "neurotopo/nn/gemm.hpp"
#include "neurotopo/nn/tensor.hpp"

namespace neurotopo::nn {

struct Conv2dSpec {
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  int pad = 0;
};
struct ReluSpec {};
struct MaxPool2dSpec {
  int size = 2;  // window and stride; trailing remainder rows/cols are dropped
};
struct FlattenSpec {};
struct DenseSpec {
  int units = 0;
};
struct SoftmaxSpec {};

using LayerSpec = std::variant<Conv2dSpec, ReluSpec, MaxPool2dSpec, FlattenSpec,
                               DenseSpec, SoftmaxSpec>;

inline const char* layer_name(const LayerSpec& spec) {
  struct Visitor {
    const char* operator()(const Conv2dSpec&) const { return "conv2d"; }
    const char* operator()(const ReluSpec&) const { return "relu"; }
    const char* operator()(const MaxPool2dSpec&) const { return "maxpool2d"; }
    const char* operator()(const FlattenSpec&) const { return "flatten"; }
    const char* operator()(const DenseSpec&) const { return "dense"; }
    const char* operator()(const SoftmaxSpec&) const { return "softmax"; }
  };
  return std::visit(Visitor{}, spec);
}

namespace detail {

// Unfolds conv windows of sample x [C,H,W] into columns of col: row
// (c*K+ki)*K+kj, column col_offset + oh*OW + ow; col rows have stride
// col_stride. Out-of-image taps produce zeros.
inline void im2col(const double* x, int C, int H, int W, int K, int stride,
                   int pad, int OH, int OW, double* col,
                   std::size_t col_stride, std::size_t col_offset) {
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < K; ++ki) {
      for (int kj = 0; kj < K; ++kj) {
        const std::size_t r = static_cast<std::size_t>((c * K + ki) * K + kj);
        double* dst = col + r * col_stride + col_offset;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + ki;
          double* drow = dst + static_cast<std::size_t>(oh) * OW;
          if (ih < 0 || ih >= H) {
            std::fill(drow, drow + OW, 0.0);
            continue;
          }
          const double* srow = x + (static_cast<std::size_t>(c) * H + ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kj;
            drow[ow] = (iw >= 0 && iw < W) ? srow[iw] : 0.0;
          }
        }
      }
    }
  }
}

// Transpose of im2col: accumulates column gradients back into dx [C,H,W].
inline void col2im_add(const double* col, int C, int H, int W, int K,
                       int stride, int pad, int OH, int OW, double* dx,
                       std::size_t col_stride, std::size_t col_offset) {
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < K; ++ki) {
      for (int kj = 0; kj < K; ++kj) {
        const std::size_t r = static_cast<std::size_t>((c * K + ki) * K + kj);
        const double* src = col + r * col_stride + col_offset;
        for (int oh = 0; oh < OH; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          const double* srow = src + static_cast<std::size_t>(oh) * OW;
          double* drow = dx + (static_cast<std::size_t>(c) * H + ih) * W;
          for (int ow = 0; ow < OW; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < W) drow[iw] += srow[ow];
          }
        }
      }
    }
  }
}

}  // namespace detail

// x [N,C,H,W], w [F, C*K*K], b [F] -> out [N,F,OH,OW]. col and prod are
// caller-provided scratch reused across batches.
inline void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                           const Conv2dSpec& s, int OH, int OW, Tensor& out,
                           std::vector<double>& col, std::vector<double>& prod) {
  const std::size_t N = x.dim(0);
  const int C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const std::size_t F = w.dim(0);
  const std::size_t ckk = w.dim(1);
  const std::size_t ohow = static_cast<std::size_t>(OH) * OW;
  const std::size_t cols = N * ohow;

  col.assign(ckk * cols, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    detail::im2col(x.ptr() + n * C * H * W, C, H, W, s.kernel, s.stride, s.pad,
                   OH, OW, col.data(), cols, n * ohow);
  prod.assign(F * cols, 0.0);
  gemm_nn(F, cols, ckk, w.ptr(), col.data(), prod.data());

  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f) {
      const double* src = prod.data() + f * cols + n * ohow;
      double* dst = out.ptr() + (n * F + f) * ohow;
      const double bias = b.data[f];
      for (std::size_t i = 0; i < ohow; ++i) dst[i] = src[i] + bias;
    }
}

// dout [N,F,OH,OW] -> dw, db, dx. Rebuilds the im2col matrix from x.
inline void conv2d_backward(const Tensor& x, const Tensor& w,
                            const Conv2dSpec& s, int OH, int OW,
                            const Tensor& dout, Tensor& dw, Tensor& db,
                            Tensor& dx, std::vector<double>& col,
                            std::vector<double>& scratch) {
  const std::size_t N = x.dim(0);
  const int C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2));
  const int W = static_cast<int>(x.dim(3));
  const std::size_t F = w.dim(0);
  const std::size_t ckk = w.dim(1);
  const std::size_t ohow = static_cast<std::size_t>(OH) * OW;
  const std::size_t cols = N * ohow;

  col.assign(ckk * cols, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    detail::im2col(x.ptr() + n * C * H * W, C, H, W, s.kernel, s.stride, s.pad,
                   OH, OW, col.data(), cols, n * ohow);

  // gather dout into [F, N*OH*OW]
  scratch.assign(F * cols, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f)
      std::copy(dout.ptr() + (n * F + f) * ohow,
                dout.ptr() + (n * F + f + 1) * ohow,
                scratch.data() + f * cols + n * ohow);

  std::fill(dw.data.begin(), dw.data.end(), 0.0);
  gemm_nt(F, ckk, cols, scratch.data(), col.data(), dw.ptr());

  std::fill(db.data.begin(), db.data.end(), 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    double acc = 0.0;
    const double* row = scratch.data() + f * cols;
    for (std::size_t i = 0; i < cols; ++i) acc += row[i];
    db.data[f] = acc;
  }

  // dcol = w^T * dout_r, then fold the columns back into dx
  col.assign(ckk * cols, 0.0);
  gemm_tn(ckk, cols, F, w.ptr(), scratch.data(), col.data());
  std::fill(dx.data.begin(), dx.data.end(), 0.0);
  for (std::size_t n = 0; n < N; ++n)
    detail::col2im_add(col.data(), C, H, W, s.kernel, s.stride, s.pad, OH, OW,
                       dx.ptr() + n * C * H * W, cols, n * ohow);
}

inline void relu_forward(const Tensor& x, Tensor& out) {
  for (std::size_t i = 0; i < x.numel(); ++i)
    out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

inline void relu_backward(const Tensor& x, const Tensor& dout, Tensor& dx) {
  for (std::size_t i = 0; i < x.numel(); ++i)
    dx.data[i] = x.data[i] > 0.0 ? dout.data[i] : 0.0;
}

// x [N,C,H,W] -> out [N,C,H/size,W/size]; remainder rows/cols are dropped.
// argmax stores the flat input offset of each window maximum (first hit wins)
// for the backward scatter.
inline void maxpool_forward(const Tensor& x, const MaxPool2dSpec& s, Tensor& out,
                            std::vector<std::size_t>& argmax) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t OH = H / s.size, OW = W / s.size;
  argmax.assign(N * C * OH * OW, 0);
  std::size_t o = 0;
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const double* plane = x.ptr() + nc * H * W;
    for (std::size_t oh = 0; oh < OH; ++oh)
      for (std::size_t ow = 0; ow < OW; ++ow, ++o) {
        std::size_t best = (oh * s.size) * W + ow * s.size;
        double best_v = plane[best];
        for (int di = 0; di < s.size; ++di)
          for (int dj = 0; dj < s.size; ++dj) {
            const std::size_t idx = (oh * s.size + di) * W + (ow * s.size + dj);
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          }
        out.data[o] = best_v;
        argmax[o] = nc * H * W + best;
      }
  }
}

inline void maxpool_backward(const Tensor& dout,
                             const std::vector<std::size_t>& argmax, Tensor& dx) {
  std::fill(dx.data.begin(), dx.data.end(), 0.0);
  for (std::size_t o = 0; o < dout.numel(); ++o) dx.data[argmax[o]] += dout.data[o];
}

// x [N,D], w [U,D], b [U] -> out [N,U]
inline void dense_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                          Tensor& out) {
  const std::size_t N = x.dim(0), D = x.dim(1), U = w.dim(0);
  std::fill(out.data.begin(), out.data.end(), 0.0);
  gemm_nt(N, U, D, x.ptr(), w.ptr(), out.ptr());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t u = 0; u < U; ++u) out.data[n * U + u] += b.data[u];
}

inline void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dout,
                           Tensor& dw, Tensor& db, Tensor& dx) {
  const std::size_t N = x.dim(0), D = x.dim(1), U = w.dim(0);
  std::fill(dw.data.begin(), dw.data.end(), 0.0);
  gemm_tn(U, D, N, dout.ptr(), x.ptr(), dw.ptr());  // dout [N,U] as A^T
  std::fill(db.data.begin(), db.data.end(), 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t u = 0; u < U; ++u) db.data[u] += dout.data[n * U + u];
  std::fill(dx.data.begin(), dx.data.end(), 0.0);
  gemm_nn(N, D, U, dout.ptr(), w.ptr(), dx.ptr());
}

// Row-wise stable softmax, x [N,C] -> probs [N,C].
inline void softmax_forward(const Tensor& x, Tensor& out) {
  const std::size_t N = x.dim(0), C = x.dim(1);
  for (std::size_t n = 0; n < N; ++n) {
    const double* row = x.ptr() + n * C;
    double* orow = out.ptr() + n * C;
    double mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      orow[c] = std::exp(row[c] - mx);
      sum += orow[c];
    }
    for (std::size_t c = 0; c < C; ++c) orow[c] /= sum;
  }
}

}  // namespace neurotopo::nn
