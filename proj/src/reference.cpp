#include "einform/reference.hpp"

#include "einform/error.hpp"

#include <array>

namespace einform {

namespace {

struct Views {
    std::size_t nc, nq, nd, ncomp;
    const double* det;
    const double* bf;   // (nq, nd)
    const double* bfg;  // (nc, nq, 3, nd)
    const double* dofs; // (nc, ncomp, nd)
    const double* mat = nullptr;

    double g(std::size_t c, std::size_t q, std::size_t j, std::size_t d) const {
        return bfg[((c * nq + q) * 3 + j) * nd + d];
    }
    double phi(std::size_t q, std::size_t d) const { return bf[q * nd + d]; }
    double dof(std::size_t c, std::size_t i, std::size_t e) const { return dofs[(c * ncomp + i) * nd + e]; }
};

// Trial values at a point: value u_i and gradient du[i][j] = d u_i / d x_j.
struct PointState {
    std::array<double, 3> u{};
    std::array<std::array<double, 3>, 3> du{};
};

PointState state_at(const Views& w, std::size_t c, std::size_t q) {
    PointState s;
    for (std::size_t i = 0; i < w.ncomp; ++i) {
        for (std::size_t e = 0; e < w.nd; ++e) {
            const double x = w.dof(c, i, e);
            s.u[i] += w.phi(q, e) * x;
            for (std::size_t j = 0; j < 3; ++j) s.du[i][j] += w.g(c, q, j, e) * x;
        }
    }
    return s;
}

// Voigt strain of the vector basis function (component r, dof d):
// 11, 22, 33, 12, 13, 23 with engineering shear.
std::array<double, 6> strain_row(const Views& w, std::size_t c, std::size_t q, std::size_t r, std::size_t d) {
    std::array<double, 6> b{};
    b[r] = w.g(c, q, r, d);
    static constexpr std::size_t pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (std::size_t k = 0; k < 3; ++k) {
        const auto [a, z] = pairs[k];
        if (r == a) b[3 + k] = w.g(c, q, z, d);
        if (r == z) b[3 + k] = w.g(c, q, a, d);
    }
    return b;
}

std::array<double, 6> strain_of(const PointState& s) {
    return {s.du[0][0], s.du[1][1], s.du[2][2], s.du[0][1] + s.du[1][0], s.du[0][2] + s.du[2][0],
            s.du[1][2] + s.du[2][1]};
}

double dot6(const double* D, const std::array<double, 6>& a, const std::array<double, 6>& b) {
    double s = 0.0;
    for (std::size_t I = 0; I < 6; ++I) {
        double t = 0.0;
        for (std::size_t K = 0; K < 6; ++K) t += D[I * 6 + K] * b[K];
        s += a[I] * t;
    }
    return s;
}

}  // namespace

DenseTensor reference_evaluate(StudyForm form, EvalMode mode, const FormData& data) {
    const auto& u = data.fields.at("u");
    if (!u.has_dofs()) throw ArgumentError("reference evaluation needs DOF values for 'u'");
    const auto& basis_field = mode == EvalMode::eval ? u : data.fields.at("v");
    const DenseTensor det = data.det.contiguous();
    const DenseTensor dofs = u.per_cell.contiguous();
    const DenseTensor bf = basis_field.basis.bf.contiguous();
    const DenseTensor bfg = basis_field.bfg.contiguous();
    if (bfg.shape() != u.bfg.shape()) throw ShapeError("reference evaluation needs equal orders for v and u");

    Views w{data.n_cells, data.n_qp, u.basis.n_dofs(), u.components, det.values().data(), bf.values().data(),
            bfg.values().data(), dofs.values().data()};
    DenseTensor mat;
    if (form == StudyForm::wdot || form == StudyForm::elastic) {
        mat = data.materials.at(form == StudyForm::wdot ? "m_M" : "m_D").contiguous();
        w.mat = mat.values().data();
    }
    const std::size_t nc = w.nc, nq = w.nq, nd = w.nd;
    const bool scalar = form == StudyForm::laplace;
    const std::size_t nv = scalar ? 1 : 3;
    const std::size_t ms = form == StudyForm::wdot ? 9 : 36;  // material entries per point

    Shape shape;
    if (mode == EvalMode::eval) shape = {nc};
    else if (mode == EvalMode::residual) shape = scalar ? Shape{nc, nd} : Shape{nc, nv, nd};
    else shape = scalar ? Shape{nc, nd, nd} : Shape{nc, nv, nd, nv, nd};
    DenseTensor out(shape);
    auto o = out.mutable_values();
    const std::size_t row = nv * nd;

    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t q = 0; q < nq; ++q) {
            const double jw = w.det[c * nq + q];
            const PointState s = state_at(w, c, q);
            const double* m = w.mat ? w.mat + (c * nq + q) * ms : nullptr;

            if (mode == EvalMode::eval) {
                double v = 0.0;
                switch (form) {
                    case StudyForm::dot:
                        for (std::size_t i = 0; i < 3; ++i) v += s.u[i] * s.u[i];
                        break;
                    case StudyForm::wdot:
                        for (std::size_t i = 0; i < 3; ++i)
                            for (std::size_t j = 0; j < 3; ++j) v += s.u[i] * m[i * 3 + j] * s.u[j];
                        break;
                    case StudyForm::laplace:
                        for (std::size_t j = 0; j < 3; ++j) v += s.du[0][j] * s.du[0][j];
                        break;
                    case StudyForm::convect:
                        for (std::size_t i = 0; i < 3; ++i)
                            for (std::size_t j = 0; j < 3; ++j) v += s.u[i] * s.du[i][j] * s.u[j];
                        break;
                    case StudyForm::elastic: {
                        const auto e = strain_of(s);
                        v = dot6(m, e, e);
                        break;
                    }
                }
                o[c] += jw * v;
                continue;
            }

            double* oc = o.data() + c * (mode == EvalMode::residual ? row : row * row);
            // Elasticity: strain rows B and D B of every basis function at this point.
            std::vector<std::array<double, 6>> B, DB;
            if (form == StudyForm::elastic) {
                for (std::size_t r = 0; r < nv; ++r) {
                    for (std::size_t d = 0; d < nd; ++d) {
                        B.push_back(strain_row(w, c, q, r, d));
                        std::array<double, 6> db{};
                        for (std::size_t I = 0; I < 6; ++I)
                            for (std::size_t K = 0; K < 6; ++K) db[I] += m[I * 6 + K] * B.back()[K];
                        DB.push_back(db);
                    }
                }
            }
            for (std::size_t r = 0; r < nv; ++r) {
                for (std::size_t d = 0; d < nd; ++d) {
                    const double vd = w.phi(q, d);
                    if (mode == EvalMode::residual) {
                        double v = 0.0;
                        switch (form) {
                            case StudyForm::dot: v = vd * s.u[r]; break;
                            case StudyForm::wdot:
                                for (std::size_t j = 0; j < 3; ++j) v += vd * m[r * 3 + j] * s.u[j];
                                break;
                            case StudyForm::laplace:
                                for (std::size_t j = 0; j < 3; ++j) v += w.g(c, q, j, d) * s.du[0][j];
                                break;
                            case StudyForm::convect:
                                for (std::size_t j = 0; j < 3; ++j) v += vd * s.du[r][j] * s.u[j];
                                break;
                            case StudyForm::elastic: v = dot6(m, B[r * nd + d], strain_of(s)); break;
                        }
                        oc[r * nd + d] += jw * v;
                        continue;
                    }
                    for (std::size_t t = 0; t < nv; ++t) {
                        for (std::size_t e = 0; e < nd; ++e) {
                            const double ue = w.phi(q, e);
                            double v = 0.0;
                            switch (form) {
                                case StudyForm::dot: v = r == t ? vd * ue : 0.0; break;
                                case StudyForm::wdot: v = vd * m[r * 3 + t] * ue; break;
                                case StudyForm::laplace:
                                    for (std::size_t j = 0; j < 3; ++j) v += w.g(c, q, j, d) * w.g(c, q, j, e);
                                    break;
                                case StudyForm::convect: {
                                    // d/du of v_r (du_r/dx_j) u_j in direction phi_e e_t
                                    double adv = 0.0;
                                    if (r == t) {
                                        for (std::size_t j = 0; j < 3; ++j) adv += w.g(c, q, j, e) * s.u[j];
                                    }
                                    v = vd * (adv + s.du[r][t] * ue);
                                    break;
                                }
                                case StudyForm::elastic:
                                    for (std::size_t I = 0; I < 6; ++I) v += B[r * nd + d][I] * DB[t * nd + e][I];
                                    break;
                            }
                            oc[(r * nd + d) * row + t * nd + e] += jw * v;
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace einform
