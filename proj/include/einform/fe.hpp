#pragma once

#include "einform/tensor.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace einform {

using Point3 = std::array<double, 3>;

/// Hexahedral mesh; local vertex a + 2b + 4c sits at reference corner
/// (-1 + 2a, -1 + 2b, -1 + 2c).
struct HexMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::size_t, 8>> cells;

    std::size_t n_cells() const { return cells.size(); }
};

/// 1 x 1 x n bar of cubes with edge `cell_size`, stacked along z.
/// Vertex layer*4 + y*2 + x sits at (x, y, layer) * cell_size.
HexMesh build_bar_mesh(std::size_t n_cells, double cell_size = 1.0);

struct QuadratureRule {
    std::vector<Point3> points;   ///< on [-1, 1]^3, x index fastest
    std::vector<double> weights;  ///< sum to 8

    std::size_t n_qp() const { return points.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]: (points, weights).
std::pair<std::vector<double>, std::vector<double>> gauss_legendre_1d(std::size_t n);

/// Tensor-product Gauss-Legendre rule with order + 1 points per axis.
/// Orders 1..5 are accepted (1..3 are evaluated in practice).
QuadratureRule gauss_quadrature(int order);

/// Tensor-product Lagrange basis on equispaced nodes, tabulated at points.
struct BasisTab {
    int order = 1;
    DenseTensor bf;       ///< (n_q, n_d)
    DenseTensor bfg_ref;  ///< (n_q, 3, n_d), derivatives along xi
    std::vector<Point3> nodes;

    std::size_t n_dofs() const { return nodes.size(); }
};

BasisTab lagrange_basis(int order, std::span<const Point3> points);
BasisTab lagrange_basis(int order, const QuadratureRule& rule);

/// Reference mapping data; det already includes the quadrature weights.
struct MappingData {
    DenseTensor det;       ///< (n_c, n_q) = |J| w
    DenseTensor jac_inv;   ///< (n_c, n_q, 3, 3), [l, j] = d xi_l / d x_j
    DenseTensor bfg_phys;  ///< (n_c, n_q, 3, n_d), d phi_k / d x_j
};

/// Tri-linear geometry from `geometry` (an order-1 tabulation at the rule's
/// points); physical gradients are formed for `field`. Throws
/// DegenerateCellError for a non-positive Jacobian determinant.
MappingData compute_mapping(const HexMesh& mesh, const QuadratureRule& rule, const BasisTab& geometry,
                            const BasisTab& field);
MappingData compute_mapping(const HexMesh& mesh, const QuadratureRule& rule, const BasisTab& geometry);

/// Physical gradients of `field` for an existing mapping.
DenseTensor physical_gradients(const MappingData& mapping, const BasisTab& field);

/// Global node numbering of an order-p field on a bar mesh. Nodes form a
/// (p+1) x (p+1) x (p*n+1) grid numbered x fastest; the local order inside a
/// cell matches BasisTab::nodes.
struct FieldSpace {
    int order = 1;
    std::size_t n_nodes = 0;
    std::vector<std::vector<std::size_t>> cell_nodes;  ///< (n_c, n_d)

    std::size_t n_cells() const { return cell_nodes.size(); }
    std::size_t n_dofs_per_cell() const { return cell_nodes.empty() ? 0 : cell_nodes.front().size(); }
};

FieldSpace build_field_space(const HexMesh& mesh, int order);

/// Per-cell DOF matrices (n_c, n_comp, n_d) from a global (n_comp, n_nodes) field.
DenseTensor gather_dofs(const DenseTensor& global, const FieldSpace& space);

/// Scatter-add of a per-cell residual, (n_c, n_comp, n_d) or (n_c, n_d), into a
/// global (n_comp, n_nodes) vector.
DenseTensor assemble_residual(const DenseTensor& per_cell, const FieldSpace& space);

}  // namespace einform
