#include "einform/transpiler.hpp"

#include "einform/error.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <sstream>

namespace einform {

namespace {

// Letter pools. Term letters, DOF letters, component (aux) letters and the
// reserved 'c'/'q' never overlap.
constexpr std::string_view term_pool = "ijklmnopab";
constexpr std::string_view dof_pool = "defgh";
constexpr std::string_view aux_pool = "rstuvwxyz";

struct BoundFactor {
    Factor::Kind kind = Factor::Kind::scalar;
    char comp = 0;
    char grad = 0;
    char storage = 0;
    std::string material_subs;
};

bool is_lower(char ch) { return ch >= 'a' && ch <= 'z'; }

/// Renames term letters to the fixed pool, walking factors left to right and,
/// inside a factor, the component slot before the gradient slot. A '0' slot
/// uses up a pool letter as well. Upper-case letters are kept.
std::vector<BoundFactor> bind_letters(const FormExpression& form) {
    std::map<char, char> rename;
    std::size_t next = 0;
    auto fresh = [&]() {
        if (next >= term_pool.size()) throw ParseError("term '" + form.term + "' uses too many indices");
        return term_pool[next++];
    };
    auto map_letter = [&](char ch) -> char {
        if (!is_lower(ch)) return ch;
        auto it = rename.find(ch);
        if (it != rename.end()) return it->second;
        const char n = fresh();
        rename.emplace(ch, n);
        return n;
    };

    std::string dropped;  // component letters of scalar arguments
    std::string vector_letters;
    std::vector<BoundFactor> out;
    for (std::size_t k = 0; k < form.factors.size(); ++k) {
        const Factor& f = form.factors[k];
        const ArgDesc& arg = form.args[k];
        BoundFactor b;
        b.kind = f.kind;
        switch (f.kind) {
            case Factor::Kind::scalar:
                fresh();
                break;
            case Factor::Kind::scalar_grad:
                fresh();
                b.grad = map_letter(f.grad);
                break;
            case Factor::Kind::vector:
            case Factor::Kind::vector_grad:
                if (!arg.is_vector()) {
                    // A component index on a scalar field reads as the scalar itself.
                    dropped.push_back(f.comp);
                    fresh();
                    b.kind = f.kind == Factor::Kind::vector ? Factor::Kind::scalar
                                                            : Factor::Kind::scalar_grad;
                } else {
                    vector_letters.push_back(f.comp);
                    b.comp = map_letter(f.comp);
                }
                if (f.grad) b.grad = map_letter(f.grad);
                break;
            case Factor::Kind::sym_grad:
            case Factor::Kind::sym_storage:
                if (!arg.is_vector()) {
                    throw ArgumentError("symmetric gradient '" + f.text + "' of scalar argument '" +
                                        arg.name + "'");
                }
                b.comp = map_letter(f.comp);
                b.grad = map_letter(f.grad);
                b.storage = f.storage;
                break;
            case Factor::Kind::material:
                for (char ch : f.material_subs) {
                    if (is_lower(ch)) vector_letters.push_back(ch);
                    b.material_subs.push_back(map_letter(ch));
                }
                break;
        }
        out.push_back(std::move(b));
    }
    for (char ch : dropped) {
        if (vector_letters.find(ch) != std::string::npos) {
            throw ArgumentError("index '" + std::string(1, ch) +
                                "' is a component of a scalar argument and of a vector or material");
        }
    }
    return out;
}

OperandDescriptor make_operand(OperandSource source, const std::string& owner, std::string subs,
                               std::string classes) {
    OperandDescriptor op;
    op.source = source;
    op.owner = owner;
    op.subscripts = std::move(subs);
    op.classes = std::move(classes);
    op.axis_perm.resize(op.subscripts.size());
    std::iota(op.axis_perm.begin(), op.axis_perm.end(), std::size_t{0});
    return op;
}

struct PartBuilder {
    const FormExpression& form;
    const std::vector<BoundFactor>& bound;
    std::size_t aux_next;  // first aux letter free for this part

    char fresh_aux() {
        if (aux_next >= aux_pool.size()) throw ParseError("term '" + form.term + "' needs too many components");
        return aux_pool[aux_next++];
    }

    /// Basis operands of an occurrence whose DOF (and component) letters stay free.
    void emit_symbolic(std::size_t k, char dof, char aux, std::vector<OperandDescriptor>& ops) {
        const auto& b = bound[k];
        const auto& name = form.args[k].name;
        const std::string d(1, dof);
        switch (b.kind) {
            case Factor::Kind::scalar:
                ops.push_back(make_operand(OperandSource::bf, name, "q" + d, "qd"));
                break;
            case Factor::Kind::scalar_grad:
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                break;
            case Factor::Kind::vector:
                ops.push_back(make_operand(OperandSource::bf, name, "q" + d, "qd"));
                ops.push_back(make_operand(OperandSource::I, name, std::string{b.comp, aux}, "vv"));
                break;
            case Factor::Kind::vector_grad:
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                ops.push_back(make_operand(OperandSource::I, name, std::string{b.comp, aux}, "vv"));
                break;
            case Factor::Kind::sym_storage:
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                ops.push_back(make_operand(OperandSource::Psg, name, std::string{aux, b.grad, b.storage}, "vg0"));
                break;
            default:
                throw ArgumentError("factor '" + form.factors[k].text + "' cannot be transpiled; "
                                    "use the s(i:j)->I storage form for symmetric gradients");
        }
    }

    /// Basis operands of an occurrence contracted with its DOF values.
    void emit_known(std::size_t k, char dof, std::vector<OperandDescriptor>& ops) {
        const auto& b = bound[k];
        const auto& name = form.args[k].name;
        const std::string d(1, dof);
        switch (b.kind) {
            case Factor::Kind::scalar:
                ops.push_back(make_operand(OperandSource::bf, name, "q" + d, "qd"));
                ops.push_back(make_operand(OperandSource::dofs, name, "c" + d, "cd"));
                break;
            case Factor::Kind::scalar_grad:
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                ops.push_back(make_operand(OperandSource::dofs, name, "c" + d, "cd"));
                break;
            case Factor::Kind::vector:
                ops.push_back(make_operand(OperandSource::bf, name, "q" + d, "qd"));
                ops.push_back(make_operand(OperandSource::dofs, name, std::string("c") + b.comp + d, "cvd"));
                break;
            case Factor::Kind::vector_grad:
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                ops.push_back(make_operand(OperandSource::dofs, name, std::string("c") + b.comp + d, "cvd"));
                break;
            case Factor::Kind::sym_storage: {
                const char aux = fresh_aux();
                ops.push_back(make_operand(OperandSource::bfg, name, std::string("cq") + b.grad + d, "cqgd"));
                ops.push_back(make_operand(OperandSource::Psg, name, std::string{aux, b.grad, b.storage}, "vg0"));
                ops.push_back(make_operand(OperandSource::dofs, name, std::string("c") + aux + d, "cvd"));
                break;
            }
            default:
                throw ArgumentError("factor '" + form.factors[k].text + "' cannot be transpiled; "
                                    "use the s(i:j)->I storage form for symmetric gradients");
        }
    }

    void emit_material(std::size_t k, std::vector<OperandDescriptor>& ops) {
        const auto& b = bound[k];
        auto op = make_operand(OperandSource::material, form.args[k].name, "cq" + b.material_subs,
                               "cq" + std::string(b.material_subs.size(), '0'));
        op.material = form.args[k].material;
        ops.push_back(std::move(op));
    }
};

std::string cache_key(std::string_view term, const std::vector<ArgDesc>& args, EvalMode mode,
                      const std::optional<std::string>& diff_var, std::string_view layout) {
    std::ostringstream os;
    os << term << '|';
    for (const auto& a : args) {
        os << a.name << ':' << static_cast<int>(a.kind) << ':' << a.components << ':' << a.material << ';';
    }
    os << '|' << to_string(mode) << '|' << diff_var.value_or("") << '|' << layout;
    return os.str();
}

}  // namespace

std::string to_string(EvalMode mode) {
    switch (mode) {
        case EvalMode::residual: return "residual";
        case EvalMode::matrix: return "matrix";
        case EvalMode::eval: return "eval";
    }
    return "?";
}

EvalMode eval_mode_from_string(std::string_view name) {
    if (name == "residual") return EvalMode::residual;
    if (name == "matrix") return EvalMode::matrix;
    if (name == "eval") return EvalMode::eval;
    throw ArgumentError("unknown evaluation mode '" + std::string(name) + "'");
}

std::string to_string(OperandSource source) {
    switch (source) {
        case OperandSource::det: return "det";
        case OperandSource::bf: return "bf";
        case OperandSource::bfg: return "bfg";
        case OperandSource::I: return "I";
        case OperandSource::dofs: return "dofs";
        case OperandSource::Psg: return "Psg";
        case OperandSource::material: return "arg";
    }
    return "?";
}

std::string OperandDescriptor::name() const {
    if (source == OperandSource::material) return material + "_" + owner + ".arg";
    return owner + "." + to_string(source);
}

std::string EinsumPart::expr() const {
    std::string s;
    for (std::size_t k = 0; k < operands.size(); ++k) {
        if (k) s += ',';
        s += operands[k].subscripts;
    }
    return s + "->" + output;
}

TranspiledEinsum transpile(const FormExpression& form, EvalMode mode,
                           const std::optional<std::string>& diff_var) {
    const std::size_t n = form.factors.size();
    if (n > dof_pool.size()) throw ArgumentError("at most 5 arguments are supported");

    std::optional<std::size_t> test_pos;
    for (std::size_t k = 0; k < n; ++k) {
        if (form.args[k].kind != ArgKind::test) continue;
        if (test_pos && form.args[*test_pos].name != form.args[k].name) {
            throw ModeError("term '" + form.term + "' has more than one test argument");
        }
        if (test_pos) throw ArgumentError("test argument '" + form.args[k].name + "' appears twice");
        test_pos = k;
    }
    if (mode == EvalMode::eval && test_pos) {
        throw ModeError("eval mode needs arguments with DOFs, but '" + form.args[*test_pos].name +
                        "' is a test argument");
    }
    if (mode != EvalMode::eval && !test_pos) {
        throw ModeError(to_string(mode) + " mode needs a test argument in '" + form.term + "'");
    }

    std::vector<std::size_t> diff_occurrences;
    if (mode == EvalMode::matrix) {
        if (!diff_var) throw ArgumentError("matrix mode needs a differentiation variable");
        bool found = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (form.args[k].name != *diff_var) continue;
            found = true;
            if (form.args[k].kind == ArgKind::test) {
                throw ArgumentError("cannot differentiate with respect to test argument '" + *diff_var + "'");
            }
            if (form.args[k].kind == ArgKind::material) {
                throw ArgumentError("cannot differentiate with respect to material '" + *diff_var + "'");
            }
            diff_occurrences.push_back(k);
        }
        if (!found) throw ArgumentError("differentiation variable '" + *diff_var + "' not in the term");
    }

    const auto bound = bind_letters(form);

    std::size_t aux_reserved = 0;
    char test_aux = 0, diff_aux = 0;
    if (test_pos && form.args[*test_pos].is_vector()) test_aux = aux_pool[aux_reserved++];
    if (!diff_occurrences.empty() && form.args[diff_occurrences.front()].is_vector()) {
        diff_aux = aux_pool[aux_reserved++];
    }

    std::size_t det_owner = 0;
    if (test_pos) {
        det_owner = *test_pos;
    } else {
        while (det_owner < n && !form.args[det_owner].is_field()) ++det_owner;
        if (det_owner == n) throw ArgumentError("term '" + form.term + "' has no field argument");
    }

    TranspiledEinsum result;
    result.mode = mode;
    result.diff_var = diff_var && mode == EvalMode::matrix ? *diff_var : "";

    std::string output = "c";
    if (test_pos) {
        if (test_aux) output.push_back(test_aux);
        output.push_back(dof_pool[*test_pos]);
    }
    if (!diff_occurrences.empty()) {
        if (diff_aux) output.push_back(diff_aux);
        output.push_back(dof_pool[diff_occurrences.front()]);
    }
    std::size_t pos = 1;
    if (test_pos) {
        if (test_aux) result.merge_plan.push_back({pos, pos + 1}), pos += 2;
        else result.merge_plan.push_back({pos}), pos += 1;
    }
    if (!diff_occurrences.empty()) {
        if (diff_aux) result.merge_plan.push_back({pos, pos + 1});
        else result.merge_plan.push_back({pos});
    }

    std::vector<std::optional<std::size_t>> symbolic;
    if (diff_occurrences.empty()) symbolic.push_back(std::nullopt);
    for (auto k : diff_occurrences) symbolic.push_back(k);

    for (const auto& sym : symbolic) {
        PartBuilder builder{form, bound, aux_reserved};
        EinsumPart part;
        part.output = output;
        part.operands.push_back(make_operand(OperandSource::det, form.args[det_owner].name, "cq", "cq"));

        auto emit = [&](std::size_t k) {
            const auto& arg = form.args[k];
            if (!arg.is_field()) {
                builder.emit_material(k, part.operands);
            } else if (test_pos && k == *test_pos) {
                builder.emit_symbolic(k, dof_pool[k], test_aux, part.operands);
            } else if (sym && k == *sym) {
                builder.emit_symbolic(k, dof_pool[diff_occurrences.front()], diff_aux, part.operands);
            } else {
                // The symbolic occurrence owns the first occurrence's DOF letter.
                const bool collides = sym && k == diff_occurrences.front();
                builder.emit_known(k, collides ? dof_pool[*sym] : dof_pool[k], part.operands);
            }
        };
        if (test_pos) emit(*test_pos);
        for (std::size_t k = 0; k < n; ++k) {
            if (!test_pos || k != *test_pos) emit(k);
        }
        result.parts.push_back(std::move(part));
    }
    return result;
}

TranspiledEinsum slice_per_cell(const TranspiledEinsum& t) {
    if (t.per_cell || t.output().find('c') == std::string::npos) return t;
    TranspiledEinsum out = t;
    out.per_cell = true;
    for (auto& part : out.parts) {
        for (auto& op : part.operands) {
            const auto k = op.subscripts.find('c');
            if (k == std::string::npos) continue;
            op.subscripts.erase(k, 1);
            op.classes.erase(k, 1);
            op.sliced = true;
            op.cell_axis = k;
        }
        part.output.erase(part.output.find('c'), 1);
    }
    for (auto& group : out.merge_plan) {
        for (auto& axis : group) --axis;
    }
    return out;
}

TranspiledEinsum apply_layout(const TranspiledEinsum& t, std::string_view layout) {
    const LayoutSpec spec = parse_class_layout(layout);
    if (t.per_cell) throw LayoutError("apply the layout before slicing per cell");
    TranspiledEinsum out = t;
    out.layout = spec.letters();
    for (auto& part : out.parts) {
        for (auto& op : part.operands) {
            if (op.layout_fixed()) continue;
            std::vector<std::size_t> rank(op.classes.size());
            for (std::size_t k = 0; k < op.classes.size(); ++k) {
                const auto p = spec.letters().find(op.classes[k]);
                if (p == std::string::npos) {
                    throw LayoutError("layout '" + spec.letters() + "' has no letter for axis class '" +
                                      std::string(1, op.classes[k]) + "' of " + op.name());
                }
                rank[k] = p;
            }
            std::vector<std::size_t> order(op.classes.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
            OperandDescriptor next = op;
            for (std::size_t k = 0; k < order.size(); ++k) {
                next.subscripts[k] = op.subscripts[order[k]];
                next.classes[k] = op.classes[order[k]];
                next.axis_perm[k] = op.axis_perm[order[k]];
            }
            op = std::move(next);
        }
    }
    return out;
}

DenseTensor build_psg(std::size_t dim) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    if (dim == 3) {
        slots = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    } else if (dim == 2) {
        slots = {{0, 0}, {1, 1}, {0, 1}};
    } else {
        throw DimensionError("symmetric storage needs D in {2, 3}, got " + std::to_string(dim));
    }
    const std::size_t n = slots.size();
    std::vector<double> v(dim * dim * n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const auto [i, j] = slots[s];
        v[(i * dim + j) * n + s] = 1.0;
        v[(j * dim + i) * n + s] = 1.0;
    }
    return DenseTensor({dim, dim, n}, std::move(v));
}

DimMap letter_dims(const EinsumPart& part, const SizeContext& sizes) {
    DimMap dims;
    auto bind = [&](char letter, std::size_t extent, const OperandDescriptor& op) {
        auto [it, inserted] = dims.emplace(letter, extent);
        if (!inserted && it->second != extent) {
            throw DimensionError("index '" + std::string(1, letter) + "' of " + op.name() + " has extent " +
                                 std::to_string(extent) + ", elsewhere " + std::to_string(it->second));
        }
    };
    const std::size_t n_sym = sizes.dim * (sizes.dim + 1) / 2;
    for (const auto& op : part.operands) {
        for (std::size_t k = 0; k < op.subscripts.size(); ++k) {
            const char letter = op.subscripts[k];
            switch (op.classes[k]) {
                case 'c': bind(letter, sizes.n_cells, op); break;
                case 'q': bind(letter, sizes.n_qp, op); break;
                case 'g':
                case 'v': bind(letter, sizes.dim, op); break;
                case 'd': {
                    auto it = sizes.n_dofs.find(op.owner);
                    if (it == sizes.n_dofs.end()) {
                        throw ArgumentError("no DOF count for argument '" + op.owner + "'");
                    }
                    bind(letter, it->second, op);
                    break;
                }
                case '0':
                    if (op.source == OperandSource::Psg) bind(letter, n_sym, op);
                    break;
                default: throw LayoutError("unknown axis class in " + op.name());
            }
        }
    }
    for (const auto& op : part.operands) {
        for (std::size_t k = 0; k < op.subscripts.size(); ++k) {
            if (op.classes[k] == '0' && !dims.contains(op.subscripts[k])) {
                throw DimensionError("material index '" + std::string(1, op.subscripts[k]) + "' of " +
                                     op.name() + " is not bound by any field operand");
            }
        }
    }
    return dims;
}

Shape operand_shape(const OperandDescriptor& op, const DimMap& dims) {
    Shape shape;
    for (char ch : op.subscripts) shape.push_back(dims.at(ch));
    return shape;
}

EinsumSpec part_spec(const EinsumPart& part, const SizeContext& sizes) {
    const DimMap dims = letter_dims(part, sizes);
    std::vector<Shape> shapes;
    for (const auto& op : part.operands) shapes.push_back(operand_shape(op, dims));
    return parse_spec(part.expr(), std::span<const Shape>(shapes));
}

Shape output_shape(const TranspiledEinsum& t, const SizeContext& sizes) {
    const DimMap dims = letter_dims(t.parts.front(), sizes);
    Shape shape;
    for (char ch : t.output()) shape.push_back(dims.at(ch));
    return shape;
}

std::string dump(const TranspiledEinsum& t, const SizeContext& sizes, PathStrategy strategy) {
    std::ostringstream os;
    for (std::size_t p = 0; p < t.parts.size(); ++p) {
        const auto& part = t.parts[p];
        if (t.parts.size() > 1) os << "part " << p + 1 << " of " << t.parts.size() << ":\n";
        const EinsumSpec spec = part_spec(part, sizes);
        os << '{';
        const std::string letters = spec.letters();
        for (std::size_t k = 0; k < letters.size(); ++k) {
            if (k) os << ", ";
            os << '\'' << letters[k] << "': " << spec.dims.at(letters[k]);
        }
        os << "}\n";
        os << part.output << ' ' << shape_str(spec.shape_of(part.output)) << " =\n";
        for (std::size_t k = 0; k < part.operands.size(); ++k) {
            const auto& op = part.operands[k];
            std::string name = op.name();
            std::string subs = op.subscripts;
            name.resize(std::max<std::size_t>(name.size() + 1, 10), ' ');
            subs.resize(std::max<std::size_t>(subs.size() + 1, 8), ' ');
            os << "  " << name << subs << shape_str(spec.shape_of(op.subscripts)) << '\n';
        }
        os << "path: " << optimize_path(spec, strategy).first.str() << '\n';
    }
    return os.str();
}

namespace {

struct TranspileCache {
    std::shared_mutex mutex;
    std::map<std::string, std::shared_ptr<const TranspiledEinsum>> entries;
};

TranspileCache& cache() {
    static TranspileCache instance;
    return instance;
}

}  // namespace

std::shared_ptr<const TranspiledEinsum> transpile_cached(std::string_view term,
                                                         const std::vector<ArgDesc>& args,
                                                         EvalMode mode,
                                                         const std::optional<std::string>& diff_var,
                                                         std::string_view layout) {
    const std::string key = cache_key(term, args, mode, diff_var, layout);
    auto& c = cache();
    {
        std::shared_lock lock(c.mutex);
        auto it = c.entries.find(key);
        if (it != c.entries.end()) return it->second;
    }
    auto compiled = std::make_shared<const TranspiledEinsum>(
        apply_layout(transpile(parse_form(term, args), mode, diff_var), layout));
    std::unique_lock lock(c.mutex);
    return c.entries.emplace(key, std::move(compiled)).first->second;
}

std::size_t transpile_cache_size() {
    auto& c = cache();
    std::shared_lock lock(c.mutex);
    return c.entries.size();
}

}  // namespace einform
