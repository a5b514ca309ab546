#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace einform {

using Shape = std::vector<std::size_t>;
using Strides = std::vector<std::size_t>;

/// Row-major (C order) strides of a shape, in item units.
Strides row_major_strides(const Shape& shape);

/// Product of all extents; 1 for a rank-0 shape.
std::size_t shape_size(const Shape& shape);

/// "(1024, 27, 3)" / "(8,)" / "()".
std::string shape_str(const Shape& shape);

/// Strided n-dimensional array of doubles.
///
/// The storage block is shared between a tensor and the views derived from it
/// (transposed(), select(), slice(), merge_axes()). Tensors are treated as
/// immutable once built; mutable_values() exists for the code that fills a
/// freshly allocated result.
class DenseTensor {
public:
    /// Rank-0 tensor holding a single zero.
    DenseTensor();

    /// Zero-filled contiguous tensor.
    explicit DenseTensor(Shape shape);

    /// Contiguous tensor over `values` (row-major).
    DenseTensor(Shape shape, std::vector<double> values);

    /// Arbitrary strided arrangement over `values`.
    DenseTensor(Shape shape, Strides strides, std::vector<double> values, std::size_t offset = 0);

    static DenseTensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    const Strides& strides() const noexcept { return strides_; }
    std::size_t offset() const noexcept { return offset_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return shape_size(shape_); }

    /// True when strides are row-major over a dense block starting at offset().
    bool is_contiguous() const noexcept;

    /// Bounds-checked element read.
    double at(std::span<const std::size_t> idx) const;
    double at(std::initializer_list<std::size_t> idx) const;

    /// Elements in row-major order; requires a contiguous tensor.
    std::span<const double> values() const;
    std::span<double> mutable_values();

    /// Row-major copy of the elements regardless of strides.
    std::vector<double> to_vector() const;

    /// Contiguous tensor with the same elements; returns *this when already contiguous.
    DenseTensor contiguous() const;

    /// Deep contiguous copy that does not share storage with *this.
    DenseTensor clone() const;

    /// View with axes reordered: result axis k is source axis axes[k].
    DenseTensor transposed(std::span<const std::size_t> axes) const;

    /// View fixing `axis` at `index` (rank drops by one).
    DenseTensor select(std::size_t axis, std::size_t index) const;

    /// View restricted to [begin, end) along `axis`.
    DenseTensor slice(std::size_t axis, std::size_t begin, std::size_t end) const;

    /// Copy-free reinterpretation of a contiguous tensor with a new shape of equal size.
    DenseTensor reshaped(Shape shape) const;

    /// Identity of the underlying storage block, for copy-free checks.
    const double* storage_id() const noexcept { return data_ ? data_->data() : nullptr; }

private:
    std::shared_ptr<std::vector<double>> data_;
    Shape shape_;
    Strides strides_;
    std::size_t offset_ = 0;
};

/// offset + sum_k strides[k] * idx[k]; throws RangeError for out-of-range indices.
std::size_t item_offset(const DenseTensor& t, std::span<const std::size_t> idx);

/// Copy of `t` whose axis k holds the source axis labelled to[k].
///
/// `from` labels the axes of `t`. Labels are letters; a single '0' stands for
/// every axis not named by another letter (material axes) and expands in place.
DenseTensor permute_to_layout(const DenseTensor& t, std::string_view from, std::string_view to);

/// Copy-free view that multiplies together the extents of each group of
/// adjacent axes. Axes not covered by any group are kept as they are.
/// Throws RequiresCopyError for non-contiguous input.
DenseTensor merge_axes(const DenseTensor& t, const std::vector<std::vector<std::size_t>>& groups);

/// max |a - b| over all elements divided by max |b| (absolute difference when b is all zero).
double max_relative_difference(const DenseTensor& a, const DenseTensor& b);

/// max |a - b| over all elements.
double max_abs_difference(const DenseTensor& a, const DenseTensor& b);

}  // namespace einform
