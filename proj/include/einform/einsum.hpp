#pragma once

#include "einform/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace einform {

using FlopCount = std::uint64_t;
using DimMap = std::map<char, std::size_t>;

/// Parsed and validated einsum subscript expression.
struct EinsumSpec {
    std::vector<std::string> inputs;  ///< one subscript string per operand
    std::string output;
    DimMap dims;                      ///< extent of every letter

    /// "ij,jk->ik".
    std::string str() const;

    /// Distinct letters in order of first appearance over the inputs.
    std::string letters() const;

    /// Extents of a subscript string.
    Shape shape_of(std::string_view subscripts) const;
};

/// Parses `expr` and validates it against the operand shapes.
///
/// Without "->" the output is every letter that appears exactly once, sorted.
/// Throws ParseError for malformed strings and ShapeError for inconsistent extents.
EinsumSpec parse_spec(std::string_view expr, std::span<const Shape> operand_shapes);
EinsumSpec parse_spec(std::string_view expr, std::span<const DenseTensor> operands);

/// Ordered contraction steps; each step lists operand positions in the current
/// operand list. The contracted operands are removed and the step result is
/// appended at the end of the list.
struct ContractionPath {
    std::vector<std::vector<std::size_t>> steps;

    /// "[(0, 1), (0, 1)]".
    std::string str() const;

    friend bool operator==(const ContractionPath&, const ContractionPath&) = default;
};

/// Cost-model flop count of one contraction step:
/// prod(extents of `indices`) * (max(1, n_terms - 1) + (has_summed ? 1 : 0)).
FlopCount step_flops(std::string_view indices, bool has_summed, std::size_t n_terms,
                     const DimMap& dims);

struct StepCost {
    std::size_t scaling = 0;  ///< number of distinct indices in the step
    std::string subscripts;   ///< "kl,jk->jl"
    std::string remaining;    ///< operand list after the step, as an expression
    bool has_summed = false;
    FlopCount flops = 0;
};

struct CostReport {
    FlopCount naive_flops = 0;
    FlopCount path_flops = 0;
    std::size_t naive_scaling = 0;
    std::size_t largest_intermediate = 0;  ///< elements, including the final result
    std::vector<StepCost> per_step;

    double speedup() const {
        return path_flops ? static_cast<double>(naive_flops) / static_cast<double>(path_flops) : 1.0;
    }
    std::size_t optimized_scaling() const;
};

enum class PathStrategy { naive, greedy, optimal };

std::string to_string(PathStrategy strategy);
PathStrategy path_strategy_from_string(std::string_view name);

/// Flops of contracting all operands in one nested loop.
FlopCount naive_flops(const EinsumSpec& spec);

/// Scores a path with the flop model; throws PathError for invalid positions or
/// a path that does not leave exactly one operand.
CostReport score_path(const EinsumSpec& spec, const ContractionPath& path);

/// Finds a contraction path.
///
///  - naive: one step over every operand;
///  - greedy: the pairwise heuristic of NumPy's einsum_path ("greedy"): prefer
///    pairs that share an index, rank by (-(size removed), step flops), cap
///    intermediates at the largest input/output size, and fall back to a single
///    multi-operand step when no admissible pair is left;
///  - optimal: exhaustive dynamic programming over pairwise contraction trees,
///    minimising total flops, then the largest intermediate.
std::pair<ContractionPath, CostReport> optimize_path(const EinsumSpec& spec,
                                                     PathStrategy strategy);

/// Direct nested-loop evaluation; the oracle for every other strategy.
DenseTensor naive_contract(const EinsumSpec& spec, std::span<const DenseTensor> operands);

/// Evaluates the spec step by step along `path`. Pairwise steps are lowered to a
/// batched matrix-matrix product over (batch, free, contracted) axis groups;
/// steps with more than two operands use the nested loop of naive_contract.
DenseTensor execute_path(const EinsumSpec& spec, std::span<const DenseTensor> operands,
                         const ContractionPath& path);

/// Text report in the style of opt_einsum's PathInfo.
std::string explain(const EinsumSpec& spec, PathStrategy strategy);
std::string explain(const EinsumSpec& spec, const ContractionPath& path);

/// "1.200e+2".
std::string format_sci(double value);

}  // namespace einform
