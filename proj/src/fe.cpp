#include "einform/fe.hpp"

#include "einform/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace einform {

namespace {

void check_order(int order) {
    if (order < 1 || order > 5) throw RangeError("approximation order must be 1..5, got " + std::to_string(order));
}

/// 1D Lagrange polynomials on equispaced nodes of [-1, 1]: values and derivatives at x.
void lagrange_1d(int order, double x, std::vector<double>& val, std::vector<double>& der) {
    const auto n = static_cast<std::size_t>(order) + 1;
    std::vector<double> t(n);
    for (std::size_t a = 0; a < n; ++a) t[a] = -1.0 + 2.0 * static_cast<double>(a) / order;
    val.assign(n, 0.0);
    der.assign(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        double v = 1.0;
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a) v *= (x - t[b]) / (t[a] - t[b]);
        }
        val[a] = v;
        double d = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            if (m == a) continue;
            double term = 1.0 / (t[a] - t[m]);
            for (std::size_t b = 0; b < n; ++b) {
                if (b != a && b != m) term *= (x - t[b]) / (t[a] - t[b]);
            }
            d += term;
        }
        der[a] = d;
    }
}

}  // namespace

HexMesh build_bar_mesh(std::size_t n_cells, double cell_size) {
    if (n_cells < 1) throw ArgumentError("a bar mesh needs at least one cell");
    if (!(cell_size > 0.0)) throw ArgumentError("cell size must be positive");
    HexMesh mesh;
    for (std::size_t layer = 0; layer <= n_cells; ++layer) {
        for (std::size_t y = 0; y < 2; ++y) {
            for (std::size_t x = 0; x < 2; ++x) {
                mesh.vertices.push_back({x * cell_size, y * cell_size, static_cast<double>(layer) * cell_size});
            }
        }
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::array<std::size_t, 8> conn{};
        for (std::size_t k = 0; k < 8; ++k) {
            const std::size_t a = k & 1, b = (k >> 1) & 1, l = k >> 2;
            conn[k] = (c + l) * 4 + b * 2 + a;
        }
        mesh.cells.push_back(conn);
    }
    return mesh;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre_1d(std::size_t n) {
    if (n == 0) throw RangeError("a Gauss rule needs at least one point");
    // P_n(z) and P_n'(z) by the three-term recurrence.
    auto legendre = [n](double z) {
        double p0 = 1.0, p1 = z;
        for (std::size_t k = 2; k <= n; ++k) {
            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        return std::pair{p1, static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0)};
    };
    std::vector<double> x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(z);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double dp = legendre(z).second;
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

QuadratureRule gauss_quadrature(int order) {
    check_order(order);
    const auto n = static_cast<std::size_t>(order) + 1;
    const auto [x, w] = gauss_legendre_1d(n);
    QuadratureRule rule;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                rule.points.push_back({x[i], x[j], x[k]});
                rule.weights.push_back(w[i] * w[j] * w[k]);
            }
        }
    }
    return rule;
}

BasisTab lagrange_basis(int order, std::span<const Point3> points) {
    check_order(order);
    const auto n1 = static_cast<std::size_t>(order) + 1;
    const std::size_t nd = n1 * n1 * n1;
    const std::size_t nq = points.size();
    BasisTab tab;
    tab.order = order;
    for (std::size_t c = 0; c < n1; ++c) {
        for (std::size_t b = 0; b < n1; ++b) {
            for (std::size_t a = 0; a < n1; ++a) {
                tab.nodes.push_back({-1.0 + 2.0 * a / order, -1.0 + 2.0 * b / order, -1.0 + 2.0 * c / order});
            }
        }
    }
    std::vector<double> bf(nq * nd), bfg(nq * 3 * nd);
    std::array<std::vector<double>, 3> val, der;
    for (std::size_t q = 0; q < nq; ++q) {
        for (std::size_t ax = 0; ax < 3; ++ax) lagrange_1d(order, points[q][ax], val[ax], der[ax]);
        for (std::size_t k = 0; k < nd; ++k) {
            const std::size_t a = k % n1, b = (k / n1) % n1, c = k / (n1 * n1);
            bf[q * nd + k] = val[0][a] * val[1][b] * val[2][c];
            bfg[(q * 3 + 0) * nd + k] = der[0][a] * val[1][b] * val[2][c];
            bfg[(q * 3 + 1) * nd + k] = val[0][a] * der[1][b] * val[2][c];
            bfg[(q * 3 + 2) * nd + k] = val[0][a] * val[1][b] * der[2][c];
        }
    }
    tab.bf = DenseTensor({nq, nd}, std::move(bf));
    tab.bfg_ref = DenseTensor({nq, 3, nd}, std::move(bfg));
    return tab;
}

BasisTab lagrange_basis(int order, const QuadratureRule& rule) { return lagrange_basis(order, rule.points); }

MappingData compute_mapping(const HexMesh& mesh, const QuadratureRule& rule, const BasisTab& geometry) {
    return compute_mapping(mesh, rule, geometry, geometry);
}

MappingData compute_mapping(const HexMesh& mesh, const QuadratureRule& rule, const BasisTab& geometry,
                            const BasisTab& field) {
    if (geometry.order != 1 || geometry.n_dofs() != 8) throw ArgumentError("geometry basis must be tri-linear");
    const std::size_t nc = mesh.n_cells(), nq = rule.n_qp();
    if (geometry.bf.shape()[0] != nq) throw ShapeError("geometry basis is not tabulated at the rule's points");
    const auto g = geometry.bfg_ref.values();
    std::vector<double> det(nc * nq), inv(nc * nq * 9);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t q = 0; q < nq; ++q) {
            double J[3][3] = {};
            for (std::size_t k = 0; k < 8; ++k) {
                const Point3& x = mesh.vertices.at(mesh.cells[c][k]);
                for (std::size_t i = 0; i < 3; ++i) {
                    for (std::size_t l = 0; l < 3; ++l) J[i][l] += x[i] * g[(q * 3 + l) * 8 + k];
                }
            }
            const double d = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                             J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                             J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
            if (!(d > 0.0)) {
                throw DegenerateCellError("cell " + std::to_string(c) + " has Jacobian determinant " +
                                          std::to_string(d) + " at quadrature point " + std::to_string(q));
            }
            det[c * nq + q] = d * rule.weights[q];
            double* m = &inv[(c * nq + q) * 9];
            m[0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / d;
            m[1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / d;
            m[2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / d;
            m[3] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / d;
            m[4] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / d;
            m[5] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / d;
            m[6] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / d;
            m[7] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / d;
            m[8] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / d;
        }
    }
    MappingData out;
    out.det = DenseTensor({nc, nq}, std::move(det));
    out.jac_inv = DenseTensor({nc, nq, 3, 3}, std::move(inv));
    out.bfg_phys = physical_gradients(out, field);
    return out;
}

DenseTensor physical_gradients(const MappingData& mapping, const BasisTab& field) {
    const std::size_t nc = mapping.det.shape()[0], nq = mapping.det.shape()[1];
    const std::size_t nd = field.n_dofs();
    if (field.bfg_ref.shape()[0] != nq) throw ShapeError("field basis is not tabulated at the mapping's points");
    const auto g = field.bfg_ref.values();
    const auto inv = mapping.jac_inv.values();
    std::vector<double> out(nc * nq * 3 * nd, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t q = 0; q < nq; ++q) {
            const double* m = &inv[(c * nq + q) * 9];
            for (std::size_t j = 0; j < 3; ++j) {
                double* dst = &out[((c * nq + q) * 3 + j) * nd];
                for (std::size_t l = 0; l < 3; ++l) {
                    const double mlj = m[l * 3 + j];
                    const double* src = &g[(q * 3 + l) * nd];
                    for (std::size_t k = 0; k < nd; ++k) dst[k] += src[k] * mlj;
                }
            }
        }
    }
    return DenseTensor({nc, nq, 3, nd}, std::move(out));
}

FieldSpace build_field_space(const HexMesh& mesh, int order) {
    check_order(order);
    const std::size_t nc = mesh.n_cells();
    if (mesh.vertices.size() != 4 * (nc + 1)) throw ArgumentError("field spaces need a bar mesh");
    const auto p = static_cast<std::size_t>(order);
    const std::size_t n1 = p + 1;
    FieldSpace space;
    space.order = order;
    space.n_nodes = n1 * n1 * (p * nc + 1);
    for (std::size_t c = 0; c < nc; ++c) {
        std::vector<std::size_t> nodes;
        for (std::size_t k = 0; k < n1; ++k) {
            for (std::size_t b = 0; b < n1; ++b) {
                for (std::size_t a = 0; a < n1; ++a) nodes.push_back(((c * p + k) * n1 + b) * n1 + a);
            }
        }
        space.cell_nodes.push_back(std::move(nodes));
    }
    return space;
}

DenseTensor gather_dofs(const DenseTensor& global, const FieldSpace& space) {
    if (global.rank() != 2 || global.shape()[1] != space.n_nodes) {
        throw ShapeError("global field of shape " + shape_str(global.shape()) + " does not match " +
                         std::to_string(space.n_nodes) + " nodes");
    }
    const DenseTensor g = global.contiguous();
    const auto v = g.values();
    const std::size_t nc = space.n_cells(), ncomp = global.shape()[0], nd = space.n_dofs_per_cell();
    std::vector<double> out(nc * ncomp * nd);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < ncomp; ++i) {
            for (std::size_t k = 0; k < nd; ++k) out[(c * ncomp + i) * nd + k] = v[i * space.n_nodes + space.cell_nodes[c][k]];
        }
    }
    return DenseTensor({nc, ncomp, nd}, std::move(out));
}

DenseTensor assemble_residual(const DenseTensor& per_cell, const FieldSpace& space) {
    const std::size_t nc = space.n_cells(), nd = space.n_dofs_per_cell();
    DenseTensor r = per_cell.contiguous();
    if (r.rank() == 2) r = r.reshaped({r.shape()[0], 1, r.shape()[1]});
    if (r.rank() != 3 || r.shape()[0] != nc || r.shape()[2] != nd) {
        throw ShapeError("per-cell residual of shape " + shape_str(per_cell.shape()) + " does not match " +
                         std::to_string(nc) + " cells with " + std::to_string(nd) + " DOFs");
    }
    const std::size_t ncomp = r.shape()[1];
    const auto v = r.values();
    DenseTensor out({ncomp, space.n_nodes});
    auto o = out.mutable_values();
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < ncomp; ++i) {
            for (std::size_t k = 0; k < nd; ++k) o[i * space.n_nodes + space.cell_nodes[c][k]] += v[(c * ncomp + i) * nd + k];
        }
    }
    return out;
}

}  // namespace einform
