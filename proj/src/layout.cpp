#include "einform/layout.hpp"

#include "einform/error.hpp"

#include <algorithm>
#include <cctype>

namespace einform {

LayoutSpec::LayoutSpec(std::string letters) : letters_(std::move(letters)) {
    for (char ch : letters_) {
        if (ch != '0' && !std::isalpha(static_cast<unsigned char>(ch))) {
            throw LayoutError("layout letter '" + std::string(1, ch) + "' is not a letter or '0'");
        }
    }
    if (std::count(letters_.begin(), letters_.end(), '0') > 1) {
        throw LayoutError("layout '" + letters_ + "' has more than one '0'");
    }
}

std::vector<std::string> LayoutSpec::expand(std::size_t rank) const {
    const bool has_material = letters_.find('0') != std::string::npos;
    const std::size_t named = letters_.size() - (has_material ? 1 : 0);
    if (named > rank || (!has_material && named != rank)) {
        throw LayoutError("layout '" + letters_ + "' does not fit a tensor of rank " +
                          std::to_string(rank));
    }
    std::vector<std::string> labels;
    labels.reserve(rank);
    for (char ch : letters_) {
        if (ch == '0') {
            for (std::size_t k = 0; k < rank - named; ++k) {
                labels.push_back("0#" + std::to_string(k));
            }
        } else {
            labels.emplace_back(1, ch);
        }
    }
    auto sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw LayoutError("layout '" + letters_ + "' repeats a letter");
    }
    return labels;
}

bool LayoutSpec::is_class_layout() const {
    for (std::size_t k = 0; k < letters_.size(); ++k) {
        if (axis_classes.find(letters_[k]) == std::string_view::npos) return false;
        if (letters_.find(letters_[k], k + 1) != std::string::npos) return false;
    }
    return true;
}

std::vector<std::size_t> LayoutSpec::permutation(const LayoutSpec& from, const LayoutSpec& to,
                                                 std::size_t rank) {
    const auto src = from.expand(rank);
    const auto dst = to.expand(rank);
    std::vector<std::size_t> perm;
    perm.reserve(rank);
    for (const auto& label : dst) {
        auto it = std::find(src.begin(), src.end(), label);
        if (it == src.end()) {
            throw LayoutError("layout '" + to.letters() + "' is not a permutation of '" +
                              from.letters() + "'");
        }
        perm.push_back(static_cast<std::size_t>(it - src.begin()));
    }
    return perm;
}

LayoutSpec parse_class_layout(std::string_view letters) {
    LayoutSpec spec{std::string(letters)};
    if (!spec.is_class_layout()) {
        throw LayoutError("'" + std::string(letters) +
                          "' is not a layout over the axis classes c, q, v, g, d, 0");
    }
    return spec;
}

}  // namespace einform
