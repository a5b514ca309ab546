#include "einform/problem.hpp"

#include "einform/error.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace einform {

namespace {

bool is_identity(const std::vector<std::size_t>& perm) {
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] != k) return false;
    }
    return true;
}

DenseTensor identity_matrix(std::size_t n) {
    DenseTensor t(Shape{n, n});
    auto v = t.mutable_values();
    for (std::size_t k = 0; k < n; ++k) v[k * n + k] = 1.0;
    return t;
}

const FieldData& field_of(const FormData& data, const OperandDescriptor& op) {
    auto it = data.fields.find(op.owner);
    if (it == data.fields.end()) throw ArgumentError("no field data for '" + op.owner + "'");
    return it->second;
}

void add_into(DenseTensor& acc, const DenseTensor& part) {
    auto a = acc.mutable_values();
    const auto p = part.values();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += p[k];
}

// Paths depend only on the spec, so repeated evaluations skip the search.
ContractionPath cached_path(const EinsumSpec& spec, PathStrategy ps) {
    static std::mutex mutex;
    static std::map<std::string, ContractionPath> memo;
    std::string key = to_string(ps) + ':' + spec.str();
    for (const auto& [ch, n] : spec.dims) key += ',' + std::string(1, ch) + std::to_string(n);
    {
        std::lock_guard lock(mutex);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
    }
    auto path = optimize_path(spec, ps).first;
    std::lock_guard lock(mutex);
    return memo.emplace(key, std::move(path)).first->second;
}

PathStrategy path_strategy_of(Strategy s) {
    switch (s) {
        case Strategy::naive: return PathStrategy::naive;
        case Strategy::greedy: return PathStrategy::greedy;
        default: return PathStrategy::optimal;
    }
}

void evaluate_full(const EinsumPart& part, const SizeContext& sizes, const FormData& data, PathStrategy ps,
                   DenseTensor& out) {
    const EinsumSpec spec = part_spec(part, sizes);
    std::vector<DenseTensor> ops;
    for (const auto& op : part.operands) ops.push_back(bind_operand(op, data));
    const auto path = cached_path(spec, ps);
    add_into(out, execute_path(spec, ops, path));
}

void evaluate_cells(const EinsumPart& sliced, const SizeContext& sizes, const FormData& data, DenseTensor& out) {
    const EinsumSpec spec = part_spec(sliced, sizes);
    const auto path = cached_path(spec, PathStrategy::optimal);
    std::vector<DenseTensor> bound;
    for (const auto& op : sliced.operands) bound.push_back(bind_operand(op, data));
    const std::size_t block = shape_size(spec.shape_of(sliced.output));
    auto o = out.mutable_values();
    std::vector<DenseTensor> ops(bound.size());
    for (std::size_t c = 0; c < data.n_cells; ++c) {
        for (std::size_t k = 0; k < bound.size(); ++k) {
            ops[k] = sliced.operands[k].sliced ? bound[k].select(sliced.operands[k].cell_axis, c) : bound[k];
        }
        const DenseTensor r = execute_path(spec, ops, path);
        const auto v = r.values();
        for (std::size_t k = 0; k < block; ++k) o[c * block + k] += v[k];
    }
}

void evaluate_threaded(const EinsumPart& part, const SizeContext& sizes, const FormData& data,
                       std::size_t threads, DenseTensor& out) {
    const EinsumSpec spec = part_spec(part, sizes);
    const auto path = cached_path(spec, PathStrategy::optimal);
    std::vector<DenseTensor> bound;
    for (const auto& op : part.operands) bound.push_back(bind_operand(op, data));
    const std::size_t n_cells = data.n_cells;
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, n_cells));
    const std::size_t block = shape_size(out.shape()) / n_cells;
    auto o = out.mutable_values();

    std::vector<std::exception_ptr> errors(n_workers);
    auto work = [&](std::size_t w) {
        try {
            const std::size_t begin = n_cells * w / n_workers, end = n_cells * (w + 1) / n_workers;
            if (begin == end) return;
            std::vector<DenseTensor> ops;
            std::vector<Shape> shapes;
            for (std::size_t k = 0; k < bound.size(); ++k) {
                const auto axis = part.operands[k].subscripts.find('c');
                ops.push_back(axis == std::string::npos ? bound[k] : bound[k].slice(axis, begin, end));
                shapes.push_back(ops.back().shape());
            }
            const EinsumSpec chunk = parse_spec(part.expr(), std::span<const Shape>(shapes));
            const DenseTensor r = execute_path(chunk, ops, path);
            const auto v = r.values();
            for (std::size_t k = 0; k < v.size(); ++k) o[begin * block + k] += v[k];
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(work, w);
    work(0);
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

SizeContext FormData::sizes() const {
    SizeContext s;
    s.n_cells = n_cells;
    s.n_qp = n_qp;
    s.dim = dim;
    for (const auto& [name, f] : fields) s.n_dofs[name] = f.basis.n_dofs();
    return s;
}

FormData make_form_data(const HexMesh& mesh, const std::vector<FieldRequest>& fields, std::uint64_t seed) {
    if (fields.empty()) throw ArgumentError("no fields requested");
    int max_order = 1;
    for (const auto& f : fields) max_order = std::max(max_order, f.order);
    const auto rule = gauss_quadrature(max_order);
    const auto geometry = lagrange_basis(1, rule);
    const auto mapping = compute_mapping(mesh, rule, geometry);

    FormData data;
    data.n_cells = mesh.n_cells();
    data.n_qp = rule.n_qp();
    data.dim = 3;
    data.det = mapping.det;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::map<int, std::pair<BasisTab, DenseTensor>> by_order;  // shared tabulations
    for (const auto& req : fields) {
        if (req.components != 1 && req.components != data.dim) {
            throw ArgumentError("field '" + req.name + "' must be scalar or have " + std::to_string(data.dim) +
                                " components");
        }
        auto it = by_order.find(req.order);
        if (it == by_order.end()) {
            auto basis = lagrange_basis(req.order, rule);
            auto bfg = physical_gradients(mapping, basis);
            it = by_order.emplace(req.order, std::pair{std::move(basis), std::move(bfg)}).first;
        }
        FieldData f;
        f.components = req.components;
        f.basis = it->second.first;
        f.bfg = it->second.second;
        f.space = build_field_space(mesh, req.order);
        if (req.with_dofs) {
            std::vector<double> v(req.components * f.space.n_nodes);
            for (auto& x : v) x = uniform(rng);
            f.global = DenseTensor({req.components, f.space.n_nodes}, std::move(v));
            f.per_cell = gather_dofs(f.global, f.space);
        }
        data.fields[req.name] = std::move(f);
    }
    return data;
}

void set_field_values(FormData& data, const std::string& name, const DenseTensor& global) {
    auto it = data.fields.find(name);
    if (it == data.fields.end()) throw ArgumentError("no field '" + name + "'");
    auto& f = it->second;
    if (global.shape() != Shape{f.components, f.space.n_nodes}) {
        throw ShapeError("values of shape " + shape_str(global.shape()) + " for field '" + name + "'");
    }
    f.global = global.contiguous();
    f.per_cell = gather_dofs(f.global, f.space);
}

DenseTensor bind_operand(const OperandDescriptor& op, const FormData& data) {
    DenseTensor t;
    switch (op.source) {
        case OperandSource::det: t = data.det; break;
        case OperandSource::bf: t = field_of(data, op).basis.bf; break;
        case OperandSource::bfg: t = field_of(data, op).bfg; break;
        case OperandSource::I: t = identity_matrix(data.dim); break;
        case OperandSource::Psg: t = build_psg(data.dim); break;
        case OperandSource::dofs: {
            const auto& f = field_of(data, op);
            if (!f.has_dofs()) throw ArgumentError("field '" + op.owner + "' has no DOF values");
            t = f.per_cell;
            if (op.axis_perm.size() == 2) t = t.reshaped({t.shape()[0], t.shape()[2]});
            break;
        }
        case OperandSource::material: {
            const std::string key = op.material + "_" + op.owner;
            auto it = data.materials.find(key);
            if (it == data.materials.end()) throw ArgumentError("no material array '" + key + "'");
            t = it->second;
            break;
        }
    }
    if (t.rank() != op.axis_perm.size()) {
        throw ShapeError(op.name() + " has shape " + shape_str(t.shape()) + " but subscripts '" + op.subscripts + "'");
    }
    if (is_identity(op.axis_perm)) return t.contiguous();
    return t.transposed(op.axis_perm).contiguous();
}

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::naive: return "naive";
        case Strategy::greedy: return "greedy";
        case Strategy::optimal: return "optimal";
        case Strategy::cell_loop: return "cell-loop";
        case Strategy::threaded: return "threaded";
        case Strategy::reference: return "reference";
    }
    return "?";
}

Strategy strategy_from_string(std::string_view name) {
    for (auto s : {Strategy::naive, Strategy::greedy, Strategy::optimal, Strategy::cell_loop, Strategy::threaded,
                   Strategy::reference}) {
        if (name == to_string(s)) return s;
    }
    throw ArgumentError("unknown strategy '" + std::string(name) + "'");
}

DenseTensor evaluate(const TranspiledEinsum& t, const FormData& data, const EvalOptions& options) {
    if (t.per_cell) throw ArgumentError("evaluate expects the full-batch expression");
    const SizeContext sizes = data.sizes();
    DenseTensor out(output_shape(t, sizes));
    switch (options.strategy) {
        case Strategy::naive:
        case Strategy::greedy:
        case Strategy::optimal:
            for (const auto& part : t.parts) evaluate_full(part, sizes, data, path_strategy_of(options.strategy), out);
            break;
        case Strategy::cell_loop: {
            const auto sliced = slice_per_cell(t);
            if (!sliced.per_cell) {
                for (const auto& part : t.parts) evaluate_full(part, sizes, data, PathStrategy::optimal, out);
                break;
            }
            for (const auto& part : sliced.parts) evaluate_cells(part, sizes, data, out);
            break;
        }
        case Strategy::threaded: {
            std::size_t threads = options.threads;
            if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
            for (const auto& part : t.parts) evaluate_threaded(part, sizes, data, threads, out);
            break;
        }
        case Strategy::reference:
            throw ArgumentError("the reference strategy is evaluated by the cell-loop oracle");
    }
    return out;
}

CostSummary cost_summary(const TranspiledEinsum& t, const SizeContext& sizes, PathStrategy strategy) {
    CostSummary s;
    for (const auto& part : t.parts) {
        const auto [path, report] = optimize_path(part_spec(part, sizes), strategy);
        s.naive_flops += report.naive_flops;
        s.path_flops += report.path_flops;
        s.largest_intermediate = std::max(s.largest_intermediate, report.largest_intermediate);
        s.paths.push_back(path);
    }
    return s;
}

double total(const DenseTensor& per_cell_values) {
    double s = 0.0;
    for (double x : per_cell_values.to_vector()) s += x;
    return s;
}

std::string to_string(StudyForm form) {
    switch (form) {
        case StudyForm::dot: return "dot";
        case StudyForm::wdot: return "wdot";
        case StudyForm::laplace: return "laplace";
        case StudyForm::convect: return "convect";
        case StudyForm::elastic: return "elastic";
    }
    return "?";
}

StudyForm study_form_from_string(std::string_view name) {
    for (auto f : all_study_forms()) {
        if (name == to_string(f)) return f;
    }
    throw ArgumentError("unknown study form '" + std::string(name) + "' (dot, wdot, laplace, convect, elastic)");
}

const std::vector<StudyForm>& all_study_forms() {
    static const std::vector<StudyForm> forms{StudyForm::dot, StudyForm::wdot, StudyForm::laplace,
                                              StudyForm::convect, StudyForm::elastic};
    return forms;
}

StudyDefinition study_definition(StudyForm form) {
    switch (form) {
        case StudyForm::dot: return {"i,i", {test_arg("v", 3), trial_arg("u", 3)}};
        case StudyForm::wdot: return {"ij,i,j", {material_arg("M"), test_arg("v", 3), trial_arg("u", 3)}};
        case StudyForm::laplace: return {"0.i,0.i", {test_arg("v"), trial_arg("u")}};
        case StudyForm::convect: return {"i,i.j,j", {test_arg("v", 3), trial_arg("u", 3), trial_arg("u", 3)}};
        case StudyForm::elastic:
            return {"IK,s(i:j)->I,s(k:l)->K", {material_arg("D"), test_arg("v", 3), trial_arg("u", 3)}};
    }
    throw ArgumentError("unknown study form");
}

FormData make_study_data(StudyForm form, int order, std::size_t n_cells, std::uint64_t seed) {
    const std::size_t comps = form == StudyForm::laplace ? 1 : 3;
    FormData data = make_form_data(build_bar_mesh(n_cells), {{"v", comps, order, false}, {"u", comps, order, true}},
                                   seed);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    const std::size_t nc = data.n_cells, nq = data.n_qp;
    if (form == StudyForm::wdot) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> m(nc * nq * 9);
        for (auto& x : m) x = u(rng);
        data.materials["m_M"] = DenseTensor({nc, nq, 3, 3}, std::move(m));
    } else if (form == StudyForm::elastic) {
        std::uniform_real_distribution<double> lam(1.0, 2.0), mu(0.5, 1.5);
        std::vector<double> d(nc * nq * 36, 0.0);
        for (std::size_t p = 0; p < nc * nq; ++p) {
            const double l = lam(rng), m = mu(rng);
            double* dp = &d[p * 36];
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j) dp[i * 6 + j] = l;
                dp[i * 6 + i] += 2.0 * m;
            }
            for (std::size_t i = 3; i < 6; ++i) dp[i * 6 + i] = m;
        }
        data.materials["m_D"] = DenseTensor({nc, nq, 6, 6}, std::move(d));
    }
    return data;
}

TranspiledEinsum transpile_study(StudyForm form, EvalMode mode, std::string_view layout) {
    auto def = study_definition(form);
    if (mode == EvalMode::eval) {
        // Integral value with v = u.
        for (auto& a : def.args) {
            if (a.kind == ArgKind::test) a = trial_arg("u", a.components);
        }
    }
    const std::optional<std::string> diff = mode == EvalMode::matrix ? std::optional<std::string>("u") : std::nullopt;
    return *transpile_cached(def.term, def.args, mode, diff, layout);
}

}  // namespace einform
