#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace neurotopo::signal {

using cdouble = std::complex<double>;

// Reusable transform of one fixed size. Mixed-radix Cooley-Tukey handles any
// smooth length; sizes with a large prime factor go through Bluestein's
// chirp-z reduction to a power of two. Plans are not thread-safe (they carry
// work buffers); give each thread its own.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (n_ == 0) throw std::invalid_argument("FftPlan: size must be positive");
    std::size_t m = n_;
    std::size_t largest = 1;
    for (std::size_t p = 2; p * p <= m;) {
      if (m % p == 0) {
        factors_.push_back(p);
        largest = std::max(largest, p);
        m /= p;
      } else {
        ++p;
      }
    }
    if (m > 1) {
      factors_.push_back(m);
      largest = std::max(largest, m);
    }

    if (largest > 61) {
      init_bluestein();
      return;
    }

    twiddles_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(j) /
                         static_cast<double>(n_);
      twiddles_[j] = {std::cos(ang), std::sin(ang)};
    }
    work_.resize(n_);
    scratch_.resize(n_);
  }

  std::size_t size() const { return n_; }

  void forward(cdouble* data) {
    if (n_ == 1) return;
    if (bluestein_inner_) {
      bluestein_forward(data);
      return;
    }
    std::copy(data, data + n_, work_.begin());
    transform_recursive(work_.data(), 1, data, n_, 0);
  }

  // Unitary pair with forward: applies the 1/n scale here.
  void inverse(cdouble* data) {
    for (std::size_t j = 0; j < n_; ++j) data[j] = std::conj(data[j]);
    forward(data);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) data[j] = std::conj(data[j]) * inv;
  }

 private:
  void transform_recursive(const cdouble* in, std::size_t stride, cdouble* out,
                           std::size_t len, std::size_t depth) {
    if (len == 1) {
      out[0] = in[0];
      return;
    }
    const std::size_t p = factors_[depth];
    const std::size_t m = len / p;
    for (std::size_t r = 0; r < p; ++r)
      transform_recursive(in + r * stride, stride * p, out + r * m, m, depth + 1);

    // Children are done with the scratch buffer, so this level may reuse it.
    cdouble* tmp = scratch_.data();
    std::copy(out, out + len, tmp);
    const std::size_t step = n_ / len;
    for (std::size_t s = 0; s < p; ++s) {
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t idx = s * m + k;
        cdouble acc = tmp[k];
        for (std::size_t r = 1; r < p; ++r)
          acc += twiddles_[((r * idx) % len) * step] * tmp[r * m + k];
        out[idx] = acc;
      }
    }
  }

  void init_bluestein() {
    bluestein_m_ = 1;
    while (bluestein_m_ < 2 * n_ - 1) bluestein_m_ <<= 1;
    chirp_.resize(n_);
    const std::size_t two_n = 2 * n_;
    for (std::size_t j = 0; j < n_; ++j) {
      // j^2 mod 2n keeps the phase argument small for large sizes.
      const std::size_t jj = (j * j) % two_n;
      const double ang = -std::numbers::pi * static_cast<double>(jj) /
                         static_cast<double>(n_);
      chirp_[j] = {std::cos(ang), std::sin(ang)};
    }
    bluestein_inner_ = std::make_unique<FftPlan>(bluestein_m_);
    chirp_spectrum_.assign(bluestein_m_, cdouble{0.0, 0.0});
    chirp_spectrum_[0] = std::conj(chirp_[0]);
    for (std::size_t j = 1; j < n_; ++j) {
      chirp_spectrum_[j] = std::conj(chirp_[j]);
      chirp_spectrum_[bluestein_m_ - j] = std::conj(chirp_[j]);
    }
    bluestein_inner_->forward(chirp_spectrum_.data());
    bluestein_work_.resize(bluestein_m_);
  }

  void bluestein_forward(cdouble* data) {
    std::fill(bluestein_work_.begin(), bluestein_work_.end(), cdouble{0.0, 0.0});
    for (std::size_t j = 0; j < n_; ++j)
      bluestein_work_[j] = data[j] * chirp_[j];
    bluestein_inner_->forward(bluestein_work_.data());
    for (std::size_t j = 0; j < bluestein_m_; ++j)
      bluestein_work_[j] *= chirp_spectrum_[j];
    bluestein_inner_->inverse(bluestein_work_.data());
    for (std::size_t k = 0; k < n_; ++k)
      data[k] = bluestein_work_[k] * chirp_[k];
  }

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<cdouble> twiddles_;
  std::vector<cdouble> work_;
  std::vector<cdouble> scratch_;

  std::size_t bluestein_m_ = 0;
  std::vector<cdouble> chirp_;
  std::vector<cdouble> chirp_spectrum_;
  std::vector<cdouble> bluestein_work_;
  std::unique_ptr<FftPlan> bluestein_inner_;
};

inline void fft(std::vector<cdouble>& v) {
  FftPlan plan(v.size());
  plan.forward(v.data());
}

inline void ifft(std::vector<cdouble>& v) {
  FftPlan plan(v.size());
  plan.inverse(v.data());
}

}  // namespace neurotopo::signal
