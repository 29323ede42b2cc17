#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cceeg {

// Dense row-major tensor of rank 1..4. Small fixed-size shape vector; data is
// a flat contiguous buffer so reshapes are free and Eigen maps are cheap.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(numel_of(shape_)), S(0));
  }

  Tensor(std::vector<std::int64_t> shape, std::vector<S> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != numel_of(shape_))
      throw std::invalid_argument("Tensor: data size does not match shape");
  }

  static Tensor scalar(S v) {
    Tensor t({1});
    t.data_[0] = v;
    return t;
  }

  static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<std::int64_t> shape, S v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& vec() { return data_; }
  const std::vector<S>& vec() const { return data_; }

  S& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  S operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  S& at2(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * dim(1) + j)]; }
  S at2(std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>(i * dim(1) + j)];
  }
  S& at3(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[static_cast<std::size_t>((i * dim(1) + j) * dim(2) + k)];
  }
  S at3(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[static_cast<std::size_t>((i * dim(1) + j) * dim(2) + k)];
  }

  // Same buffer viewed under a new shape (sizes must agree).
  Tensor reshaped(std::vector<std::int64_t> shape) const {
    if (numel_of(shape) != numel()) throw std::invalid_argument("reshape: element count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;

  // View the whole buffer as a rows x cols row-major matrix.
  MatMap mat(std::int64_t rows, std::int64_t cols) {
    if (rows * cols != numel()) throw std::invalid_argument("mat: size mismatch");
    return MatMap(data_.data(), rows, cols);
  }
  ConstMatMap mat(std::int64_t rows, std::int64_t cols) const {
    if (rows * cols != numel()) throw std::invalid_argument("mat: size mismatch");
    return ConstMatMap(data_.data(), rows, cols);
  }
  // Matrix view of a rank-2 tensor.
  MatMap mat2() { return mat(dim(0), dim(1)); }
  ConstMatMap mat2() const { return mat(dim(0), dim(1)); }
  // Matrix view of slice b of a rank-3 tensor: dim(1) x dim(2).
  MatMap mat_slice(std::int64_t b) {
    return MatMap(data_.data() + b * dim(1) * dim(2), dim(1), dim(2));
  }
  ConstMatMap mat_slice(std::int64_t b) const {
    return ConstMatMap(data_.data() + b * dim(1) * dim(2), dim(1), dim(2));
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& shape) {
    if (shape.empty()) return 0;
    std::int64_t n = 1;
    for (auto d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<S> data_;
};

inline std::string shape_str(const std::vector<std::int64_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace cceeg
