#pragma once

#include "einform/problem.hpp"

namespace einform {

/// Hand-written quadrature loops for the study forms; no einsum machinery.
///
/// Shapes follow the unmerged transpiler output: residual (n_c, D, n_d) or
/// (n_c, n_d) for the scalar Laplacian, matrix (n_c, D, n_d, D, n_d) or
/// (n_c, n_d, n_d), eval (n_c,). Eval mode uses v = u. Elasticity builds the
/// Voigt strain-displacement rows directly (engineering shear strains).
DenseTensor reference_evaluate(StudyForm form, EvalMode mode, const FormData& data);

}  // namespace einform
