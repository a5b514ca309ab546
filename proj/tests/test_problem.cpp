#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "einform/error.hpp"
#include "einform/problem.hpp"
#include "einform/reference.hpp"

#include <cmath>
#include <random>

using namespace einform;

namespace {

constexpr double tol = 1e-11;

const EvalMode all_modes[] = {EvalMode::residual, EvalMode::matrix, EvalMode::eval};

}  // namespace

TEST_CASE("every strategy agrees with the hand-written loops") {
    for (int order : {1, 2}) {
        for (auto form : all_study_forms()) {
            const auto data = make_study_data(form, order, 3, 11);
            for (auto mode : all_modes) {
                const auto t = transpile_study(form, mode);
                const auto ref = reference_evaluate(form, mode, data);
                for (auto s : {Strategy::naive, Strategy::greedy, Strategy::optimal, Strategy::cell_loop,
                               Strategy::threaded}) {
                    CAPTURE(to_string(form));
                    CAPTURE(to_string(mode));
                    CAPTURE(to_string(s));
                    CAPTURE(order);
                    EvalOptions opt{s, 2};
                    const auto got = evaluate(t, data, opt);
                    REQUIRE(got.shape() == ref.shape());
                    CHECK(max_relative_difference(got, ref) < tol);
                }
            }
        }
    }
}

TEST_CASE("layouts do not change the values") {
    const auto data = make_study_data(StudyForm::elastic, 1, 2, 5);
    const auto base = evaluate(transpile_study(StudyForm::elastic, EvalMode::matrix), data, {});
    for (const char* layout : {"cqgvd0", "dgvqc0", "0cdqgv", "qcd0gv"}) {
        CAPTURE(layout);
        const auto t = transpile_study(StudyForm::elastic, EvalMode::matrix, layout);
        CHECK(max_relative_difference(evaluate(t, data, {}), base) < tol);
        CHECK(max_relative_difference(evaluate(t, data, {Strategy::cell_loop}), base) < tol);
    }
}

TEST_CASE("thread count does not change the result") {
    const auto data = make_study_data(StudyForm::convect, 1, 7, 3);
    const auto t = transpile_study(StudyForm::convect, EvalMode::residual);
    const auto one = evaluate(t, data, {Strategy::threaded, 1});
    for (std::size_t n : {2u, 3u, 7u, 16u}) {
        CHECK(max_abs_difference(evaluate(t, data, {Strategy::threaded, n}), one) == 0.0);
    }
}

TEST_CASE("residual is linear in the test function and the matrix is its Jacobian") {
    // Linear forms: residual = K u cell by cell.
    for (auto form : {StudyForm::dot, StudyForm::wdot, StudyForm::laplace, StudyForm::elastic}) {
        const auto data = make_study_data(form, 1, 2, 9);
        const auto R = evaluate(transpile_study(form, EvalMode::residual), data, {}).to_vector();
        const auto K = evaluate(transpile_study(form, EvalMode::matrix), data, {}).to_vector();
        const auto U = data.fields.at("u").per_cell.to_vector();
        const std::size_t n = U.size() / data.n_cells;
        double err = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < data.n_cells; ++c) {
            for (std::size_t a = 0; a < n; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < n; ++b) s += K[(c * n + a) * n + b] * U[c * n + b];
                err = std::max(err, std::abs(s - R[c * n + a]));
                scale = std::max(scale, std::abs(R[c * n + a]));
            }
        }
        CAPTURE(to_string(form));
        CHECK(err < 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("convection matrix matches finite differences of the residual") {
    auto data = make_study_data(StudyForm::convect, 1, 1, 21);
    const auto tr = transpile_study(StudyForm::convect, EvalMode::residual);
    const auto K = evaluate(transpile_study(StudyForm::convect, EvalMode::matrix), data, {}).to_vector();
    const DenseTensor g0 = data.fields.at("u").global.clone();
    const std::size_t nn = g0.shape()[1];
    const std::size_t nd = data.fields.at("u").basis.n_dofs();
    const auto& nodes = data.fields.at("u").space.cell_nodes[0];
    const double h = 1e-6;
    double err = 0.0;
    for (std::size_t comp = 0; comp < 3; ++comp) {
        for (std::size_t e = 0; e < nd; ++e) {
            auto plus = g0.to_vector(), minus = g0.to_vector();
            plus[comp * nn + nodes[e]] += h;
            minus[comp * nn + nodes[e]] -= h;
            set_field_values(data, "u", DenseTensor({3, nn}, plus));
            const auto rp = evaluate(tr, data, {}).to_vector();
            set_field_values(data, "u", DenseTensor({3, nn}, minus));
            const auto rm = evaluate(tr, data, {}).to_vector();
            for (std::size_t a = 0; a < 3 * nd; ++a) {
                const double fd = (rp[a] - rm[a]) / (2 * h);
                err = std::max(err, std::abs(fd - K[a * 3 * nd + comp * nd + e]));
            }
        }
    }
    CHECK(err < 1e-7);
}

TEST_CASE("mass residual of a constant field integrates the basis") {
    auto data = make_study_data(StudyForm::dot, 2, 4, 1);
    const std::size_t nn = data.fields.at("u").space.n_nodes;
    set_field_values(data, "u", DenseTensor::filled({3, nn}, 1.0));
    const auto R = evaluate(transpile_study(StudyForm::dot, EvalMode::residual), data, {});
    const auto global = assemble_residual(R, data.fields.at("u").space);
    // Partition of unity: the residual sums to the volume per component.
    for (std::size_t comp = 0; comp < 3; ++comp) {
        double s = 0.0;
        for (std::size_t k = 0; k < nn; ++k) s += global.at({comp, k});
        CHECK(s == doctest::Approx(4.0).epsilon(1e-12));
    }
    const auto e = evaluate(transpile_study(StudyForm::dot, EvalMode::eval), data, {});
    CHECK(e.shape() == Shape{4});
    CHECK(total(e) == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("Laplacian of a linear field") {
    auto data = make_study_data(StudyForm::laplace, 2, 3, 1);
    const auto& space = data.fields.at("u").space;
    // Node coordinates from the structured numbering: x fastest.
    const std::size_t p = 2, nx = p + 1;
    std::vector<double> g(space.n_nodes);
    for (std::size_t k = 0; k < space.n_nodes; ++k) {
        const double x = double(k % nx) / p, y = double((k / nx) % nx) / p, z = double(k / (nx * nx)) / p;
        g[k] = 2.0 * x - y + 0.5 * z;
    }
    set_field_values(data, "u", DenseTensor({1, space.n_nodes}, g));
    const auto e = evaluate(transpile_study(StudyForm::laplace, EvalMode::eval), data, {});
    CHECK(total(e) == doctest::Approx(3.0 * (4.0 + 1.0 + 0.25)).epsilon(1e-12));
}

TEST_CASE("binding errors") {
    auto data = make_study_data(StudyForm::wdot, 1, 2, 1);
    const auto t = transpile_study(StudyForm::wdot, EvalMode::residual);
    data.materials.erase("m_M");
    CHECK_THROWS_AS(evaluate(t, data, {}), ArgumentError);
    data.materials["m_M"] = DenseTensor({2, 8, 3, 2});
    CHECK_THROWS_AS(evaluate(t, data, {}), ShapeError);
    data.materials["m_M"] = DenseTensor({2, 8, 3});
    CHECK_THROWS_AS(evaluate(t, data, {}), ShapeError);
    CHECK_THROWS_AS(evaluate(slice_per_cell(t), data, {}), ArgumentError);
    CHECK_THROWS_AS(evaluate(t, data, {Strategy::reference}), ArgumentError);
    CHECK_THROWS_AS(strategy_from_string("fast"), ArgumentError);
    CHECK_THROWS_AS(study_form_from_string("stokes"), ArgumentError);
    CHECK(strategy_from_string("cell-loop") == Strategy::cell_loop);
}
