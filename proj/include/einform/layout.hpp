#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace einform {

/// Axis-order specification: one letter per logical axis.
///
/// For operand layouts in FE expressions the letters come from the axis-class
/// alphabet c (cells), q (quadrature points), v (variable component),
/// g (gradient component), d (local DOF) and 0 (all material axes). A single
/// '0' may stand for several axes and is expanded by expand().
class LayoutSpec {
public:
    static constexpr std::string_view axis_classes = "cqvgd0";
    static constexpr std::string_view default_layout = "cqgvd0";

    LayoutSpec() = default;
    explicit LayoutSpec(std::string letters);

    const std::string& letters() const noexcept { return letters_; }
    bool empty() const noexcept { return letters_.empty(); }

    /// Axis labels for a tensor of `rank` axes: '0' becomes "0#0", "0#1", ...
    /// Throws LayoutError when the counts do not fit or labels repeat.
    std::vector<std::string> expand(std::size_t rank) const;

    /// True when every letter belongs to the axis-class alphabet and appears once.
    bool is_class_layout() const;

    /// Permutation p with to.expand(rank)[k] == from.expand(rank)[p[k]].
    static std::vector<std::size_t> permutation(const LayoutSpec& from, const LayoutSpec& to,
                                                std::size_t rank);

    friend bool operator==(const LayoutSpec&, const LayoutSpec&) = default;

private:
    std::string letters_;
};

/// Reads a global class layout such as "cqgvd0"; throws LayoutError for letters
/// outside the class alphabet or repeated letters.
LayoutSpec parse_class_layout(std::string_view letters);

}  // namespace einform
