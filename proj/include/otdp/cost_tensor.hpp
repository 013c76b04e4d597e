#ifndef OTDP_COST_TENSOR_HPP_
#define OTDP_COST_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "otdp/error.hpp"
#include "otdp/ext_real.hpp"

namespace otdp {

/// Dense row-major array of extended-real costs over a product of finite
/// supports (last axis fastest). Entries must be nonnegative.
class CostTensor {
 public:
  CostTensor() = default;
  explicit CostTensor(std::vector<std::size_t> shape, ExtReal fill = 0.0);

  /// Fills every cell with fn(multi-index).
  static CostTensor from_function(std::vector<std::size_t> shape,
                                  const std::function<ExtReal(std::span<const std::size_t>)>& fn);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t cells() const { return data_.size(); }

  ExtReal& operator[](std::size_t linear) { return data_[linear]; }
  ExtReal operator[](std::size_t linear) const { return data_[linear]; }

  ExtReal at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }
  void set(std::span<const std::size_t> index, ExtReal v);

  std::size_t linear_index(std::span<const std::size_t> index) const;
  std::vector<std::size_t> multi_index(std::size_t linear) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<ExtReal> data_;
};

/// Advances `index` through the product of `shape` in row-major order.
/// Returns false after the last index (index is then all zeros).
bool next_multi_index(std::vector<std::size_t>& index, std::span<const std::size_t> shape);

}  // namespace otdp

#endif  // OTDP_COST_TENSOR_HPP_
