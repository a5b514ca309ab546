#pragma once

#include "einform/einsum.hpp"
#include "einform/form.hpp"
#include "einform/layout.hpp"
#include "einform/tensor.hpp"

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace einform {

enum class EvalMode { residual, matrix, eval };

std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view name);

enum class OperandSource { det, bf, bfg, I, dofs, Psg, material };

std::string to_string(OperandSource source);

/// One einsum operand, named after Tab.-4 style "<arg>.<array>".
struct OperandDescriptor {
    OperandSource source = OperandSource::det;
    std::string owner;       ///< argument name ("D" for material "m_D.arg")
    std::string material;    ///< material name, material operands only
    std::string subscripts;
    std::string classes;     ///< axis class per subscript letter: c q g v d 0
    std::vector<std::size_t> axis_perm;  ///< axis k holds canonical axis axis_perm[k]
    bool sliced = false;     ///< cell axis removed by slice_per_cell
    std::size_t cell_axis = 0;  ///< where the removed cell axis sat, for sliced operands

    std::string name() const;

    /// I and Psg keep their axis order under every layout.
    bool layout_fixed() const { return source == OperandSource::I || source == OperandSource::Psg; }
};

/// One einsum expression; the parts of a TranspiledEinsum are summed.
struct EinsumPart {
    std::vector<OperandDescriptor> operands;
    std::string output;

    std::string expr() const;  ///< "cq,cqjd,cqje->cde"
};

struct TranspiledEinsum {
    EvalMode mode = EvalMode::residual;
    std::string diff_var;
    std::vector<EinsumPart> parts;
    /// Output axis groups (component, DOF) that merge_axes flattens to local
    /// row/column indices; single-axis groups for scalar fields.
    std::vector<std::vector<std::size_t>> merge_plan;
    std::string layout = std::string(LayoutSpec::default_layout);
    bool per_cell = false;

    const std::string& output() const { return parts.front().output; }
};

/// Extents needed to turn subscripts into shapes.
struct SizeContext {
    std::size_t n_cells = 1;
    std::size_t n_qp = 1;
    std::size_t dim = 3;
    std::map<std::string, std::size_t> n_dofs;  ///< per field argument name
};

/// Compiles a parsed form. `diff_var` is required in matrix mode and names the
/// trial argument to differentiate by; it is ignored otherwise.
///
/// Throws ModeError for a test argument in eval mode or a weak mode without one,
/// and ArgumentError for a missing, material or test diff_var.
TranspiledEinsum transpile(const FormExpression& form, EvalMode mode,
                           const std::optional<std::string>& diff_var = std::nullopt);

/// Per-cell expression: 'c' removed from every subscript and the output.
TranspiledEinsum slice_per_cell(const TranspiledEinsum& t);

/// Permutes every operand not of type I/Psg so its axes follow the order of
/// their classes in `layout` (e.g. "cqgvd0"). The output is unchanged.
/// Throws LayoutError when `layout` lacks a class used by a permutable operand.
TranspiledEinsum apply_layout(const TranspiledEinsum& t, std::string_view layout);

/// Symmetric-gradient selector of shape (D, D, D(D+1)/2) in the order
/// 11, 22, 33, 12, 13, 23 (2D: 11, 22, 12). Entry [i, j, I] is 1 when the pair
/// (i, j) or (j, i) is stored in slot I, so off-diagonal slots receive
/// G_ij + G_ji. Throws DimensionError for D outside {2, 3}.
DenseTensor build_psg(std::size_t dim);

/// Extent of every letter in a part; throws DimensionError for an unbound
/// material letter.
DimMap letter_dims(const EinsumPart& part, const SizeContext& sizes);

/// Shape of one operand in its current layout.
Shape operand_shape(const OperandDescriptor& op, const DimMap& dims);

/// Einsum spec of a part for the given sizes.
EinsumSpec part_spec(const EinsumPart& part, const SizeContext& sizes);

/// Output shape shared by all parts.
Shape output_shape(const TranspiledEinsum& t, const SizeContext& sizes);

/// Text listing of each part: letter extents, output, operand table and path.
std::string dump(const TranspiledEinsum& t, const SizeContext& sizes, PathStrategy strategy);

/// Memoised transpile(parse_form(term, args), mode, diff_var) followed by
/// apply_layout(layout). Safe to call from several threads.
std::shared_ptr<const TranspiledEinsum> transpile_cached(std::string_view term,
                                                         const std::vector<ArgDesc>& args,
                                                         EvalMode mode,
                                                         const std::optional<std::string>& diff_var,
                                                         std::string_view layout);

/// Number of entries held by the transpile cache.
std::size_t transpile_cache_size();

}  // namespace einform
