#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "einform/einsum.hpp"
#include "einform/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

using namespace einform;

namespace {

DenseTensor random_tensor(const Shape& shape, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = u(rng);
    return DenseTensor(shape, std::move(v));
}

DenseTensor integer_tensor(const Shape& shape, std::mt19937& rng) {
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = static_cast<double>(static_cast<int>(rng() % 7) - 3);
    return DenseTensor(shape, std::move(v));
}

std::vector<DenseTensor> operands_for(const EinsumSpec& spec, std::mt19937& rng) {
    std::vector<DenseTensor> ops;
    for (const auto& s : spec.inputs) ops.push_back(random_tensor(spec.shape_of(s), rng));
    return ops;
}

EinsumSpec spec_from_dims(const std::string& expr, const DimMap& dims) {
    std::vector<Shape> shapes;
    const auto lhs = expr.substr(0, expr.find("->"));
    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        const auto s = lhs.substr(start, comma - start);
        Shape shape;
        for (char ch : s) shape.push_back(dims.at(ch));
        shapes.push_back(shape);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parse_spec(expr, std::span<const Shape>(shapes));
}

// Independent cost oracle: every pairwise contraction order, enumerated step by
// step with plain std::set bookkeeping.
FlopCount brute_force_min(std::vector<std::set<char>> ops, const std::set<char>& output,
                          const DimMap& dims) {
    if (ops.size() == 1) return 0;
    FlopCount best = std::numeric_limits<FlopCount>::max();
    for (std::size_t a = 0; a < ops.size(); ++a) {
        for (std::size_t b = a + 1; b < ops.size(); ++b) {
            std::set<char> keep = output;
            for (std::size_t k = 0; k < ops.size(); ++k) {
                if (k != a && k != b) keep.insert(ops[k].begin(), ops[k].end());
            }
            std::set<char> all = ops[a];
            all.insert(ops[b].begin(), ops[b].end());
            std::set<char> result;
            bool summed = false;
            FlopCount size = 1;
            for (char ch : all) {
                size *= dims.at(ch);
                if (keep.count(ch)) result.insert(ch);
                else summed = true;
            }
            if (ops.size() == 2) result = output, summed = all.size() != output.size();
            const FlopCount cost = size * (1 + (summed ? 1 : 0));
            auto next = ops;
            next.erase(next.begin() + static_cast<std::ptrdiff_t>(b));
            next.erase(next.begin() + static_cast<std::ptrdiff_t>(a));
            next.push_back(result);
            best = std::min(best, cost + brute_force_min(next, output, dims));
        }
    }
    return best;
}

EinsumSpec random_spec(std::mt19937& rng, bool allow_repeats) {
    const std::string pool = "abcdefg";
    const std::size_t n_ops = 1 + rng() % 5;
    DimMap dims;
    for (char ch : pool) dims[ch] = 1 + rng() % 6;
    std::vector<std::string> inputs;
    std::set<char> used;
    for (std::size_t op = 0; op < n_ops; ++op) {
        const std::size_t rank = rng() % 6;
        std::string s;
        while (s.size() < rank) {
            const char ch = pool[rng() % pool.size()];
            if (!allow_repeats && s.find(ch) != std::string::npos) continue;
            s.push_back(ch);
        }
        used.insert(s.begin(), s.end());
        inputs.push_back(s);
    }
    std::string output;
    for (char ch : used) {
        if (rng() % 2) output.push_back(ch);
    }
    std::shuffle(output.begin(), output.end(), rng);
    std::string expr;
    for (std::size_t k = 0; k < inputs.size(); ++k) expr += (k ? "," : "") + inputs[k];
    return spec_from_dims(expr + "->" + output, dims);
}

const std::string vector_dot_matrix = "cq,qd,ir,qe,is->crdse";
const DimMap vector_dot_dims{{'c', 1024}, {'q', 8}, {'d', 8}, {'e', 8}, {'i', 3}, {'r', 3}, {'s', 3}};
const std::string elasticity_matrix = "cq,cqje,rjI,cqIK,cqlf,slK->cresf";
const DimMap elasticity_dims{{'c', 1024}, {'q', 8}, {'j', 3}, {'e', 8}, {'r', 3}, {'I', 6},
                             {'K', 6},    {'l', 3}, {'f', 8}, {'s', 3}};

}  // namespace

TEST_CASE("parse_spec") {
    const std::vector<Shape> chain{{2, 2}, {2, 5}, {5, 2}};
    const auto spec = parse_spec("ij,jk,kl->il", std::span<const Shape>(chain));
    CHECK(spec.dims == DimMap{{'i', 2}, {'j', 2}, {'k', 5}, {'l', 2}});
    CHECK(spec.output == "il");

    const std::vector<Shape> lap{{1024, 27}, {1024, 27, 3, 27}, {1024, 27, 3, 27}};
    const auto l = parse_spec("cq, cqjd, cqje -> cde", std::span<const Shape>(lap));
    CHECK(l.dims == DimMap{{'c', 1024}, {'q', 27}, {'j', 3}, {'d', 27}, {'e', 27}});
    CHECK(l.letters() == "cqjde");

    const std::vector<Shape> sq{{3, 3}};
    CHECK(parse_spec("ii", std::span<const Shape>(sq)).output.empty());
    const std::vector<Shape> two{{3, 4}, {4, 5}};
    CHECK(parse_spec("ij,jk", std::span<const Shape>(two)).output == "ik");
    CHECK(parse_spec("kj,ji", std::span<const Shape>(two)).output == "ik");

    CHECK_THROWS_AS(parse_spec("ij,jk->ik", std::span<const Shape>(chain)), ShapeError);
    CHECK_THROWS_AS(parse_spec("ij,kk->ik", std::span<const Shape>(two)), ShapeError);
    CHECK_THROWS_AS(parse_spec("ij,jk->iz", std::span<const Shape>(two)), ParseError);
    CHECK_THROWS_AS(parse_spec("ij,j1->ik", std::span<const Shape>(two)), ParseError);
    CHECK_THROWS_AS(parse_spec("ij,jk->ii", std::span<const Shape>(two)), ParseError);
    CHECK_THROWS_AS(parse_spec("ij,jk->i->k", std::span<const Shape>(two)), ParseError);
    CHECK_THROWS_AS(parse_spec("i,jk->ik", std::span<const Shape>(two)), ShapeError);
}

TEST_CASE("step_flops") {
    const DimMap dims{{'i', 2}, {'j', 2}, {'k', 5}, {'l', 2}};
    CHECK(step_flops("ijkl", true, 3, dims) == 120);
    CHECK(step_flops("jkl", true, 2, dims) == 40);
    CHECK(step_flops("ijl", true, 2, dims) == 16);
    CHECK(step_flops("i", false, 1, DimMap{{'i', 7}}) == 7);
}

TEST_CASE("chained dot report") {
    const auto spec = spec_from_dims("ij,jk,kl->il", {{'i', 2}, {'j', 2}, {'k', 5}, {'l', 2}});
    const auto [path, report] = optimize_path(spec, PathStrategy::optimal);
    CHECK(report.naive_flops == 120);
    CHECK(report.path_flops == 56);
    CHECK(report.largest_intermediate == 4);
    CHECK(report.speedup() == doctest::Approx(2.142857).epsilon(1e-6));
    CHECK(path.str() == "[(1, 2), (0, 1)]");
    CHECK(report.per_step[0].subscripts == "jk,kl->jl");
    CHECK(report.per_step[0].remaining == "ij,jl->il");

    const auto text = explain(spec, PathStrategy::optimal);
    CHECK(text.find("      Naive FLOP count:  1.200e+2\n") != std::string::npos);
    CHECK(text.find("  Optimized FLOP count:  5.600e+1\n") != std::string::npos);
    CHECK(text.find("   Theoretical speedup:  2.143e+0\n") != std::string::npos);
    CHECK(text.find("  Largest intermediate:  4.000e+0 elements\n") != std::string::npos);
    CHECK(text.find("scaling        BLAS                current                             remaining") !=
          std::string::npos);
    CHECK(text.find("   3           GEMM              jk,kl->jl") != std::string::npos);

    const auto greedy = optimize_path(spec, PathStrategy::greedy);
    CHECK(greedy.second.path_flops == 56);
}

TEST_CASE("format_sci") {
    CHECK(format_sci(120) == "1.200e+2");
    CHECK(format_sci(1.0) == "1.000e+0");
    CHECK(format_sci(0.00123) == "1.230e-3");
    CHECK(format_sci(1.5e12) == "1.500e+12");
}

TEST_CASE("two-operand and single-operand paths") {
    const auto spec = spec_from_dims("ij,jk->ik", {{'i', 3}, {'j', 4}, {'k', 5}});
    for (auto s : {PathStrategy::naive, PathStrategy::greedy, PathStrategy::optimal}) {
        const auto [path, report] = optimize_path(spec, s);
        CHECK(path.str() == "[(0, 1)]");
        CHECK(report.speedup() == 1.0);
    }
    const auto unary = spec_from_dims("ii->i", {{'i', 3}});
    CHECK(optimize_path(unary, PathStrategy::greedy).first.str() == "[(0,)]");
}

TEST_CASE("score_path rejects invalid paths") {
    const auto spec = spec_from_dims("ij,jk,kl->il", {{'i', 2}, {'j', 2}, {'k', 5}, {'l', 2}});
    CHECK_THROWS_AS(score_path(spec, {{{0, 3}}}), PathError);
    CHECK_THROWS_AS(score_path(spec, {{{0, 1}, {0, 2}}}), PathError);
    CHECK_THROWS_AS(score_path(spec, {{{0, 1}}}), PathError);
    CHECK_THROWS_AS(score_path(spec, {{{1, 1}, {0, 1}}}), PathError);
    std::mt19937 rng(0);
    const auto ops = operands_for(spec, rng);
    CHECK_THROWS_AS(execute_path(spec, ops, {{{1, 2}, {0, 2}}}), PathError);
}

TEST_CASE("greedy golden paths") {
    const auto lap = spec_from_dims("cq,cqjd,cqje->cde",
                                    {{'c', 1024}, {'q', 27}, {'j', 3}, {'d', 27}, {'e', 27}});
    CHECK(optimize_path(lap, PathStrategy::greedy).first.str() == "[(0, 1), (0, 1)]");

    const auto vd = spec_from_dims(vector_dot_matrix, vector_dot_dims);
    const auto [path, report] = optimize_path(vd, PathStrategy::greedy);
    CHECK(path.str() == "[(2, 4), (1, 2), (0, 2), (0, 1)]");
    const auto printed = score_path(vd, {{{2, 4}, {0, 1}, {0, 2}, {0, 1}}});
    CHECK(report.path_flops <= printed.path_flops);

    const auto res = spec_from_dims("cq,qd,ir,qe,cie->crd", vector_dot_dims);
    CHECK(optimize_path(res, PathStrategy::greedy).first.str() == "[(3, 4), (0, 3), (0, 2), (0, 1)]");

    const auto el = spec_from_dims(elasticity_matrix, elasticity_dims);
    CHECK(optimize_path(el, PathStrategy::greedy).first.str() == "[(0, 1), (0, 1), (0, 1, 2, 3)]");

    // Tri-quadratic extents; NumPy's einsum_path(optimize="greedy") gives the same list.
    auto el27 = elasticity_dims;
    el27['q'] = el27['e'] = el27['f'] = 27;
    const auto greedy = optimize_path(spec_from_dims(elasticity_matrix, el27), PathStrategy::greedy);
    CHECK(greedy.first.str() == "[(0, 3), (1, 4), (2, 3), (0, 1, 2)]");
    // 995328 + 17915904 + 26873856 + 4897760256 from the four steps.
    CHECK(greedy.second.path_flops == 4943545344ull);
}

TEST_CASE("optimal elasticity path is no worse than the published one") {
    const auto el = spec_from_dims(elasticity_matrix, elasticity_dims);
    const auto printed = score_path(el, {{{0, 4}, {2, 3}, {1, 3}, {1, 2}, {0, 1}}});
    const auto [path, report] = optimize_path(el, PathStrategy::optimal);
    CHECK(report.path_flops <= printed.path_flops);
    CHECK(report.path_flops < report.naive_flops);
}

TEST_CASE("identity table") {
    std::mt19937 rng(5);
    const auto a = random_tensor({4, 4}, rng);
    const auto u = random_tensor({4}, rng);
    const auto w = random_tensor({3}, rng);
    const std::vector<DenseTensor> one{a};

    const auto trace = naive_contract(parse_spec("ii", std::span<const DenseTensor>(one)), one);
    double expect = 0;
    for (std::size_t i = 0; i < 4; ++i) expect += a.at({i, i});
    CHECK(trace.at(std::initializer_list<std::size_t>{}) == doctest::Approx(expect));

    const auto diag = naive_contract(parse_spec("ii->i", std::span<const DenseTensor>(one)), one);
    for (std::size_t i = 0; i < 4; ++i) CHECK(diag.at({i}) == a.at({i, i}));

    const auto tr = naive_contract(parse_spec("ij->ji", std::span<const DenseTensor>(one)), one);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) CHECK(tr.at({j, i}) == a.at({i, j}));
    }

    const std::vector<DenseTensor> pair{u, w};
    const auto outer = naive_contract(parse_spec("i,j->ij", std::span<const DenseTensor>(pair)), pair);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(outer.at({i, j}) == u.at({i}) * w.at({j}));
    }

    const std::vector<DenseTensor> bil{u, a, u};
    const auto spec = parse_spec("i,ij,j->", std::span<const DenseTensor>(bil));
    double form = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) form += u.at({i}) * a.at({i, j}) * u.at({j});
    }
    CHECK(naive_contract(spec, bil).at(std::initializer_list<std::size_t>{}) == doctest::Approx(form));
    CHECK(execute_path(spec, bil, optimize_path(spec, PathStrategy::optimal).first)
              .at(std::initializer_list<std::size_t>{}) == doctest::Approx(form));

    const std::vector<DenseTensor> picks{DenseTensor({2}, {1, 0}), DenseTensor({2, 2}, {2, 3, 4, 5}),
                                         DenseTensor({2}, {1, 0})};
    CHECK(naive_contract(parse_spec("i,ij,j->", std::span<const DenseTensor>(picks)), picks)
              .at(std::initializer_list<std::size_t>{}) == 2.0);

    const std::vector<DenseTensor> mm{DenseTensor({2, 2}, {1, 0, 0, 1}), DenseTensor({2, 2}, {7, 8, 9, 10})};
    CHECK(naive_contract(parse_spec("ik,kj->ij", std::span<const DenseTensor>(mm)), mm).to_vector() ==
          std::vector<double>{7, 8, 9, 10});
}

TEST_CASE("chained dot is exact on integers") {
    std::mt19937 rng(0);
    const auto spec = spec_from_dims("ij,jk,kl->il", {{'i', 2}, {'j', 2}, {'k', 5}, {'l', 2}});
    std::vector<DenseTensor> ops;
    for (const auto& s : spec.inputs) ops.push_back(integer_tensor(spec.shape_of(s), rng));
    const auto naive = naive_contract(spec, ops);
    for (const auto& path : {ContractionPath{{{1, 2}, {0, 1}}}, ContractionPath{{{0, 1}, {0, 1}}},
                             ContractionPath{{{0, 2}, {0, 1}}}, ContractionPath{{{0, 1, 2}}}}) {
        CHECK(execute_path(spec, ops, path).to_vector() == naive.to_vector());
    }
}

TEST_CASE("strided operands contract like their copies") {
    std::mt19937 rng(2);
    const auto a = random_tensor({5, 4}, rng);
    const auto b = random_tensor({4, 6}, rng);
    const std::vector<std::size_t> swap{1, 0};
    const std::vector<DenseTensor> views{a.transposed(swap), b.slice(1, 1, 4)};
    const std::vector<DenseTensor> copies{views[0].contiguous(), views[1].contiguous()};
    const auto spec = parse_spec("ji,jk->ik", std::span<const DenseTensor>(views));
    CHECK(naive_contract(spec, views).to_vector() == naive_contract(spec, copies).to_vector());
    CHECK(execute_path(spec, views, {{{0, 1}}}).to_vector() ==
          execute_path(spec, copies, {{{0, 1}}}).to_vector());
}

TEST_CASE("random specs: paths match the naive oracle") {
    std::mt19937 rng(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        const auto spec = random_spec(rng, trial % 4 == 3);
        CAPTURE(spec.str());
        const auto ops = operands_for(spec, rng);
        const auto naive = naive_contract(spec, ops);
        for (auto strategy : {PathStrategy::greedy, PathStrategy::optimal}) {
            const auto [path, report] = optimize_path(spec, strategy);
            CAPTURE(path.str());
            const auto got = execute_path(spec, ops, path);
            REQUIRE(got.shape() == naive.shape());
            CHECK(max_relative_difference(got, naive) <= 1e-12);
            CHECK(report.largest_intermediate >= shape_size(naive.shape()));
        }
    }
}

TEST_CASE("optimal equals brute-force enumeration; costs are monotone") {
    std::mt19937 rng(7);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto spec = random_spec(rng, false);
        if (spec.inputs.size() < 2) continue;
        CAPTURE(spec.str());
        std::vector<std::set<char>> sets;
        for (const auto& s : spec.inputs) sets.emplace_back(s.begin(), s.end());
        const std::set<char> output(spec.output.begin(), spec.output.end());
        const auto optimal = optimize_path(spec, PathStrategy::optimal).second;
        CHECK(optimal.path_flops == brute_force_min(sets, output, spec.dims));
        if (spec.inputs.size() >= 3) {
            const auto greedy = optimize_path(spec, PathStrategy::greedy).second;
            CHECK(optimal.path_flops <= greedy.path_flops);
            CHECK(greedy.path_flops <= greedy.naive_flops);
        }
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("execution is deterministic") {
    std::mt19937 rng(9);
    const auto spec = spec_from_dims("cq,cqjd,cqje->cde", {{'c', 6}, {'q', 8}, {'j', 3}, {'d', 8}, {'e', 8}});
    const auto ops = operands_for(spec, rng);
    const auto path = optimize_path(spec, PathStrategy::optimal).first;
    CHECK(execute_path(spec, ops, path).to_vector() == execute_path(spec, ops, path).to_vector());
    CHECK(max_relative_difference(execute_path(spec, ops, path), naive_contract(spec, ops)) <= 1e-12);
}
