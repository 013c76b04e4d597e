#include "otdp/cost_tensor.hpp"

#include <numeric>

namespace otdp {

CostTensor::CostTensor(std::vector<std::size_t> shape, ExtReal fill) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (auto s : shape_) {
    if (s == 0) throw DomainError("transport", "cost tensor axis of size zero");
    n *= s;
  }
  data_.assign(n, fill);
}

CostTensor CostTensor::from_function(
    std::vector<std::size_t> shape,
    const std::function<ExtReal(std::span<const std::size_t>)>& fn) {
  CostTensor t(std::move(shape));
  std::vector<std::size_t> index(t.rank(), 0);
  do {
    t.set(index, fn(index));
  } while (next_multi_index(index, t.shape_));
  return t;
}

void CostTensor::set(std::span<const std::size_t> index, ExtReal v) {
  if (v < ExtReal(0.0)) throw DomainError("transport", "transportation costs must be nonnegative");
  data_[linear_index(index)] = v;
}

std::size_t CostTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw DomainError("transport", "index rank mismatch");
  std::size_t linear = 0;
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (index[a] >= shape_[a]) throw DomainError("transport", "index out of range");
    linear = linear * shape_[a] + index[a];
  }
  return linear;
}

std::vector<std::size_t> CostTensor::multi_index(std::size_t linear) const {
  std::vector<std::size_t> index(shape_.size());
  for (std::size_t a = shape_.size(); a-- > 0;) {
    index[a] = linear % shape_[a];
    linear /= shape_[a];
  }
  return index;
}

bool next_multi_index(std::vector<std::size_t>& index, std::span<const std::size_t> shape) {
  for (std::size_t a = shape.size(); a-- > 0;) {
    if (++index[a] < shape[a]) return true;
    index[a] = 0;
  }
  return false;
}

}  // namespace otdp
