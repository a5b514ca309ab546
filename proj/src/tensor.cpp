#include "einform/tensor.hpp"

#include "einform/error.hpp"
#include "einform/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace einform {

namespace {

void check_extents(const Shape& shape) {
    for (auto d : shape) {
        if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

}  // namespace

Strides row_major_strides(const Shape& shape) {
    Strides strides(shape.size(), 1);
    for (std::size_t k = shape.size(); k-- > 1;) {
        strides[k - 1] = strides[k] * shape[k];
    }
    return strides;
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k) os << ", ";
        os << shape[k];
    }
    if (shape.size() == 1) os << ',';
    os << ')';
    return os.str();
}

DenseTensor::DenseTensor() : data_(std::make_shared<std::vector<double>>(1, 0.0)) {}

DenseTensor::DenseTensor(Shape shape)
    : DenseTensor(shape, std::vector<double>(shape_size(shape), 0.0)) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : data_(std::make_shared<std::vector<double>>(std::move(values))),
      shape_(std::move(shape)),
      strides_(row_major_strides(shape_)) {
    check_extents(shape_);
    if (data_->size() != shape_size(shape_)) {
        throw ShapeError("value count " + std::to_string(data_->size()) +
                         " does not match shape " + shape_str(shape_));
    }
}

DenseTensor::DenseTensor(Shape shape, Strides strides, std::vector<double> values,
                         std::size_t offset)
    : data_(std::make_shared<std::vector<double>>(std::move(values))),
      shape_(std::move(shape)),
      strides_(std::move(strides)),
      offset_(offset) {
    check_extents(shape_);
    if (strides_.size() != shape_.size()) {
        throw ShapeError("stride count does not match rank of shape " + shape_str(shape_));
    }
    std::size_t last = offset_;
    for (std::size_t k = 0; k < shape_.size(); ++k) last += strides_[k] * (shape_[k] - 1);
    if (last >= data_->size()) {
        throw RangeError("strided layout reaches item " + std::to_string(last) +
                         " beyond a block of " + std::to_string(data_->size()));
    }
}

DenseTensor DenseTensor::filled(Shape shape, double value) {
    const auto n = shape_size(shape);
    return DenseTensor(std::move(shape), std::vector<double>(n, value));
}

bool DenseTensor::is_contiguous() const noexcept {
    std::size_t expected = 1;
    for (std::size_t k = shape_.size(); k-- > 0;) {
        if (shape_[k] != 1 && strides_[k] != expected) return false;
        expected *= shape_[k];
    }
    return true;
}

double DenseTensor::at(std::span<const std::size_t> idx) const {
    return (*data_)[item_offset(*this, idx)];
}

double DenseTensor::at(std::initializer_list<std::size_t> idx) const {
    return at(std::span<const std::size_t>(idx.begin(), idx.size()));
}

std::span<const double> DenseTensor::values() const {
    if (!is_contiguous()) throw RequiresCopyError("values() needs a contiguous tensor");
    return {data_->data() + offset_, size()};
}

std::span<double> DenseTensor::mutable_values() {
    if (!is_contiguous()) throw RequiresCopyError("mutable_values() needs a contiguous tensor");
    return {data_->data() + offset_, size()};
}

std::vector<double> DenseTensor::to_vector() const {
    if (is_contiguous()) {
        auto v = values();
        return {v.begin(), v.end()};
    }
    std::vector<double> out(size());
    const std::size_t n = rank();
    std::vector<std::size_t> idx(n, 0);
    std::size_t src = offset_;
    const auto& data = *data_;
    for (std::size_t pos = 0; pos < out.size(); ++pos) {
        out[pos] = data[src];
        for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < shape_[k]) {
                src += strides_[k];
                break;
            }
            src -= strides_[k] * (shape_[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

DenseTensor DenseTensor::contiguous() const {
    if (is_contiguous()) return *this;
    return DenseTensor(shape_, to_vector());
}

DenseTensor DenseTensor::clone() const { return DenseTensor(shape_, to_vector()); }

DenseTensor DenseTensor::transposed(std::span<const std::size_t> axes) const {
    if (axes.size() != rank()) throw RangeError("transpose needs one entry per axis");
    std::vector<bool> seen(rank(), false);
    DenseTensor out = *this;
    for (std::size_t k = 0; k < axes.size(); ++k) {
        if (axes[k] >= rank() || seen[axes[k]]) {
            throw RangeError("transpose axes are not a permutation");
        }
        seen[axes[k]] = true;
        out.shape_[k] = shape_[axes[k]];
        out.strides_[k] = strides_[axes[k]];
    }
    return out;
}

DenseTensor DenseTensor::select(std::size_t axis, std::size_t index) const {
    if (axis >= rank() || index >= shape_[axis]) {
        throw RangeError("select(" + std::to_string(axis) + ", " + std::to_string(index) +
                         ") outside shape " + shape_str(shape_));
    }
    DenseTensor out = *this;
    out.offset_ += strides_[axis] * index;
    out.shape_.erase(out.shape_.begin() + static_cast<std::ptrdiff_t>(axis));
    out.strides_.erase(out.strides_.begin() + static_cast<std::ptrdiff_t>(axis));
    return out;
}

DenseTensor DenseTensor::slice(std::size_t axis, std::size_t begin, std::size_t end) const {
    if (axis >= rank() || begin >= end || end > shape_[axis]) {
        throw RangeError("slice outside shape " + shape_str(shape_));
    }
    DenseTensor out = *this;
    out.offset_ += strides_[axis] * begin;
    out.shape_[axis] = end - begin;
    return out;
}

DenseTensor DenseTensor::reshaped(Shape shape) const {
    if (!is_contiguous()) throw RequiresCopyError("reshape of a non-contiguous tensor");
    check_extents(shape);
    if (shape_size(shape) != size()) {
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    DenseTensor out = *this;
    out.strides_ = row_major_strides(shape);
    out.shape_ = std::move(shape);
    return out;
}

std::size_t item_offset(const DenseTensor& t, std::span<const std::size_t> idx) {
    if (idx.size() != t.rank()) {
        throw RangeError("index of rank " + std::to_string(idx.size()) + " for shape " +
                         shape_str(t.shape()));
    }
    std::size_t off = t.offset();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= t.shape()[k]) {
            throw RangeError("index " + std::to_string(idx[k]) + " out of range on axis " +
                             std::to_string(k) + " of shape " + shape_str(t.shape()));
        }
        off += t.strides()[k] * idx[k];
    }
    return off;
}

DenseTensor permute_to_layout(const DenseTensor& t, std::string_view from, std::string_view to) {
    const LayoutSpec src{std::string(from)};
    const LayoutSpec dst{std::string(to)};
    const auto perm = LayoutSpec::permutation(src, dst, t.rank());
    // Both sides expand to rank() unique labels, so inclusion is a bijection.
    return t.transposed(perm).contiguous();
}

DenseTensor merge_axes(const DenseTensor& t, const std::vector<std::vector<std::size_t>>& groups) {
    if (!t.is_contiguous()) {
        throw RequiresCopyError("merge_axes needs a contiguous tensor; call contiguous() first");
    }
    Shape shape;
    std::size_t next = 0;
    for (const auto& group : groups) {
        if (group.empty()) throw RangeError("empty axis group");
        if (group.front() < next) throw RangeError("axis groups overlap or are out of order");
        for (std::size_t k = 1; k < group.size(); ++k) {
            if (group[k] != group[k - 1] + 1) throw RangeError("axis group is not adjacent");
        }
        if (group.back() >= t.rank()) throw RangeError("axis group outside tensor rank");
        for (; next < group.front(); ++next) shape.push_back(t.shape()[next]);
        std::size_t extent = 1;
        for (auto axis : group) extent *= t.shape()[axis];
        shape.push_back(extent);
        next = group.back() + 1;
    }
    for (; next < t.rank(); ++next) shape.push_back(t.shape()[next]);
    return t.reshaped(std::move(shape));
}

double max_abs_difference(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("cannot compare " + shape_str(a.shape()) + " with " +
                         shape_str(b.shape()));
    }
    const auto va = a.to_vector();
    const auto vb = b.to_vector();
    double diff = 0.0;
    for (std::size_t k = 0; k < va.size(); ++k) diff = std::max(diff, std::abs(va[k] - vb[k]));
    return diff;
}

double max_relative_difference(const DenseTensor& a, const DenseTensor& b) {
    const double diff = max_abs_difference(a, b);
    double scale = 0.0;
    for (double x : b.to_vector()) scale = std::max(scale, std::abs(x));
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace einform
