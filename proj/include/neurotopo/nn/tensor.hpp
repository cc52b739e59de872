#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace neurotopo::nn {

// Dense row-major double tensor; images are NCHW.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(numel_of(shape), 0.0) {}

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t dim(std::size_t i) const {
    if (i >= shape.size())
      throw std::out_of_range("tensor: axis " + std::to_string(i) +
                              " of a rank-" + std::to_string(shape.size()) +
                              " tensor");
    return shape[i];
  }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  // Reallocates to a new shape; element values are unspecified afterwards.
  void resize(const std::vector<std::size_t>& s) {
    shape = s;
    data.resize(numel_of(s));
  }

  void reshape(std::vector<std::size_t> s) {
    if (numel_of(s) != data.size())
      throw std::invalid_argument("tensor: reshape to " + shape_string(s) +
                                  " changes element count from " +
                                  std::to_string(data.size()));
    shape = std::move(s);
  }

  static std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i)
      out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
  }
  std::string shape_string() const { return shape_string(shape); }
};

}  // namespace neurotopo::nn
