#pragma once

#include "einform/einsum.hpp"
#include "einform/fe.hpp"
#include "einform/transpiler.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace einform {

/// FE data of one field argument.
struct FieldData {
    std::size_t components = 1;
    BasisTab basis;
    DenseTensor bfg;      ///< (n_c, n_q, 3, n_d) physical gradients
    FieldSpace space;
    DenseTensor global;   ///< (n_comp, n_nodes); empty for test fields
    DenseTensor per_cell; ///< (n_c, n_comp, n_d) gathered DOFs; empty for test fields

    bool has_dofs() const { return per_cell.rank() == 3; }
};

/// Everything an evaluation reads: mapping, fields and materials.
struct FormData {
    std::size_t n_cells = 0;
    std::size_t n_qp = 0;
    std::size_t dim = 3;
    DenseTensor det;                             ///< (n_c, n_q)
    std::map<std::string, FieldData> fields;     ///< by argument name
    std::map<std::string, DenseTensor> materials;  ///< by "<material>_<name>", shape (n_c, n_q, ...)

    SizeContext sizes() const;
};

struct FieldRequest {
    std::string name;
    std::size_t components = 1;
    int order = 1;
    bool with_dofs = true;
};

/// Mapping and basis data for `fields` on `mesh`; the quadrature has
/// (max order + 1) points per axis. DOF values are drawn uniformly from
/// [-1, 1] with `seed`.
FormData make_form_data(const HexMesh& mesh, const std::vector<FieldRequest>& fields, std::uint64_t seed);

/// Replaces the DOF values of a field (global shape (n_comp, n_nodes)).
void set_field_values(FormData& data, const std::string& name, const DenseTensor& global);

/// Operand tensor in the descriptor's current axis order (contiguous).
/// Throws ArgumentError for missing data and ShapeError for mismatched materials.
DenseTensor bind_operand(const OperandDescriptor& op, const FormData& data);

enum class Strategy { naive, greedy, optimal, cell_loop, threaded, reference };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct EvalOptions {
    Strategy strategy = Strategy::optimal;
    std::size_t threads = 1;  ///< threaded strategy only; 0 means hardware concurrency
};

/// Cost-model totals over all parts of an expression.
struct CostSummary {
    FlopCount naive_flops = 0;
    FlopCount path_flops = 0;
    std::size_t largest_intermediate = 0;
    std::vector<ContractionPath> paths;  ///< one per part
};

/// naive/greedy/optimal evaluate the full batch with the matching path; cell_loop
/// evaluates the per-cell expression with one optimal path for every cell;
/// threaded splits the cells into contiguous chunks, one per worker, all using
/// the optimal full-batch path. Results do not depend on the thread count.
/// The reference strategy is served by reference.hpp.
DenseTensor evaluate(const TranspiledEinsum& t, const FormData& data, const EvalOptions& options);

/// Cost summary of the full-batch expression for a path strategy.
CostSummary cost_summary(const TranspiledEinsum& t, const SizeContext& sizes, PathStrategy strategy);

/// Sum of an eval-mode result over cells.
double total(const DenseTensor& per_cell_values);

// ---------------------------------------------------------------------------
// The five forms of the benchmark study
// ---------------------------------------------------------------------------

enum class StudyForm { dot, wdot, laplace, convect, elastic };

std::string to_string(StudyForm form);
StudyForm study_form_from_string(std::string_view name);
const std::vector<StudyForm>& all_study_forms();

struct StudyDefinition {
    std::string term;
    std::vector<ArgDesc> args;  ///< weak-form arguments: test "v", trial "u", materials
};

StudyDefinition study_definition(StudyForm form);

/// Bar mesh with `n_cells` unit cubes, random DOFs for "u" and random materials
/// (weighted dot: a random 3 x 3 matrix per point; elasticity: isotropic D with
/// random positive Lame parameters).
FormData make_study_data(StudyForm form, int order, std::size_t n_cells, std::uint64_t seed);

/// Transpiled expression of a study form; matrix mode differentiates by "u".
TranspiledEinsum transpile_study(StudyForm form, EvalMode mode, std::string_view layout = LayoutSpec::default_layout);

}  // namespace einform
