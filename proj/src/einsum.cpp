#include "einform/einsum.hpp"

#include "einform/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <type_traits>

namespace einform {

namespace {

using LetterMask = std::uint64_t;

int letter_bit(char ch) {
    if (ch >= 'a' && ch <= 'z') return ch - 'a';
    if (ch >= 'A' && ch <= 'Z') return 26 + (ch - 'A');
    throw ParseError("invalid subscript character '" + std::string(1, ch) + "'");
}

char bit_letter(int bit) { return bit < 26 ? static_cast<char>('a' + bit) : static_cast<char>('A' + bit - 26); }

LetterMask mask_of(std::string_view s) {
    LetterMask m = 0;
    for (char ch : s) m |= LetterMask{1} << letter_bit(ch);
    return m;
}

std::size_t mask_size(LetterMask m, const DimMap& dims) {
    std::size_t size = 1;
    while (m) {
        const int bit = std::countr_zero(m);
        size *= dims.at(bit_letter(bit));
        m &= m - 1;
    }
    return size;
}

FlopCount mask_flops(LetterMask indices, bool has_summed, std::size_t n_terms, const DimMap& dims) {
    const FlopCount factor = std::max<std::size_t>(1, n_terms - 1) + (has_summed ? 1 : 0);
    return static_cast<FlopCount>(mask_size(indices, dims)) * factor;
}

/// Letters of `subs` (concatenated in order) kept in `keep`, unique, first-appearance order.
std::string ordered_letters(const std::vector<std::string_view>& subs, LetterMask keep) {
    std::string out;
    LetterMask seen = 0;
    for (auto s : subs) {
        for (char ch : s) {
            const LetterMask bit = LetterMask{1} << letter_bit(ch);
            if ((keep & bit) && !(seen & bit)) {
                out.push_back(ch);
                seen |= bit;
            }
        }
    }
    return out;
}

std::string strip_spaces(std::string_view expr) {
    std::string out;
    for (char ch : expr) {
        if (!std::isspace(static_cast<unsigned char>(ch))) out.push_back(ch);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Nested-loop contraction
// ---------------------------------------------------------------------------

/// result[out] = sum over the remaining letters of the product of operand items.
///
/// Loops run over the output letters first, then over the summed letters by
/// increasing extent. The product of the operands whose letters are all
/// bound at a given depth is formed at that depth and carried inward.
DenseTensor loop_contract(const std::vector<std::string_view>& subs,
                          const std::vector<const DenseTensor*>& operands, std::string_view output,
                          const DimMap& dims) {
    const LetterMask out_mask = mask_of(output);
    std::string order(output);
    std::string summed = ordered_letters(subs, ~out_mask);
    std::stable_sort(summed.begin(), summed.end(), [&](char a, char b) { return dims.at(a) < dims.at(b); });
    order += summed;
    const std::size_t depth_count = order.size();

    Shape out_shape;
    for (char ch : output) out_shape.push_back(dims.at(ch));
    DenseTensor result(out_shape);
    auto out = result.mutable_values();
    const auto out_strides = row_major_strides(out_shape);

    const std::size_t n_ops = operands.size();
    std::vector<std::span<const double>> data(n_ops);
    std::vector<std::size_t> base_offset(n_ops, 0);
    // stride[op * depth_count + d]
    std::vector<std::size_t> stride(n_ops * depth_count, 0);
    std::vector<std::vector<std::size_t>> ready(depth_count + 1);
    double constant = 1.0;
    for (std::size_t op = 0; op < n_ops; ++op) {
        const DenseTensor& t = *operands[op];
        if (t.rank() != subs[op].size()) throw ShapeError("operand rank does not match subscripts");
        base_offset[op] = t.offset();
        std::size_t max_depth = 0;
        bool any = false;
        std::size_t extent_reach = t.offset();
        for (std::size_t ax = 0; ax < subs[op].size(); ++ax) {
            const auto d = order.find(subs[op][ax]);
            stride[op * depth_count + d] += t.strides()[ax];
            max_depth = any ? std::max(max_depth, d) : d;
            any = true;
            extent_reach += t.strides()[ax] * (t.shape()[ax] - 1);
        }
        // Operands are read through their own strides; no copy is needed here.
        data[op] = std::span<const double>(t.storage_id(), extent_reach + 1);
        if (!any) {
            constant *= data[op][base_offset[op]];
        } else {
            ready[max_depth].push_back(op);
        }
    }
    std::vector<std::size_t> out_stride(depth_count, 0);
    for (std::size_t k = 0; k < output.size(); ++k) {
        out_stride[order.find(output[k])] = out_strides[k];
    }
    std::vector<std::size_t> extent(depth_count);
    for (std::size_t d = 0; d < depth_count; ++d) extent[d] = dims.at(order[d]);

    if (depth_count == 0) {
        out[0] = constant;
        return result;
    }

    std::vector<std::size_t> offs(base_offset);
    std::function<void(std::size_t, double, std::size_t)> rec;
    rec = [&](std::size_t d, double partial, std::size_t out_off) {
        const auto& here = ready[d];
        const std::size_t n = extent[d];
        if (d + 1 == depth_count) {
            double* dst = out.data() + out_off;
            const std::size_t ostep = out_stride[d];
            if (here.size() <= 4) {
                const double* a[4] = {nullptr, nullptr, nullptr, nullptr};
                std::size_t s[4] = {0, 0, 0, 0};
                for (std::size_t k = 0; k < here.size(); ++k) {
                    a[k] = data[here[k]].data() + offs[here[k]];
                    s[k] = stride[here[k] * depth_count + d];
                }
                auto run = [&]<std::size_t M>(std::integral_constant<std::size_t, M>) {
                    auto term = [&](std::size_t i) {
                        double p = 1.0;
                        for (std::size_t k = 0; k < M; ++k) p *= a[k][i * s[k]];
                        return p;
                    };
                    if (ostep == 0) {
                        // Innermost letter is summed: keep the sum in a register.
                        double acc = 0.0;
                        for (std::size_t i = 0; i < n; ++i) acc += term(i);
                        *dst += partial * acc;
                    } else {
                        for (std::size_t i = 0; i < n; ++i) dst[i * ostep] += partial * term(i);
                    }
                };
                switch (here.size()) {
                    case 0: run(std::integral_constant<std::size_t, 0>{}); break;
                    case 1: run(std::integral_constant<std::size_t, 1>{}); break;
                    case 2: run(std::integral_constant<std::size_t, 2>{}); break;
                    case 3: run(std::integral_constant<std::size_t, 3>{}); break;
                    default: run(std::integral_constant<std::size_t, 4>{}); break;
                }
                return;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double p = partial;
                for (auto op : here) p *= data[op][offs[op] + i * stride[op * depth_count + d]];
                dst[i * ostep] += p;
            }
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double p = partial;
            for (auto op : here) p *= data[op][offs[op]];
            rec(d + 1, p, out_off + i * out_stride[d]);
            for (std::size_t op = 0; op < n_ops; ++op) offs[op] += stride[op * depth_count + d];
        }
        for (std::size_t op = 0; op < n_ops; ++op) offs[op] -= stride[op * depth_count + d] * n;
    };
    rec(0, constant, 0);
    return result;
}

DenseTensor permute_letters(const DenseTensor& t, std::string_view from, std::string_view to) {
    if (from == to) return t.contiguous();
    std::vector<std::size_t> perm;
    perm.reserve(to.size());
    for (char ch : to) perm.push_back(from.find(ch));
    return t.transposed(perm).contiguous();
}

bool has_repeats(std::string_view s) {
    LetterMask seen = 0;
    for (char ch : s) {
        const LetterMask bit = LetterMask{1} << letter_bit(ch);
        if (seen & bit) return true;
        seen |= bit;
    }
    return false;
}

/// Pairwise step lowered to C[b, i, j] = sum_k A[b, i, k] * B[b, k, j].
DenseTensor contract_pair(DenseTensor a, std::string sa, DenseTensor b, std::string sb,
                          std::string_view out, const DimMap& dims) {
    const LetterMask out_mask = mask_of(out);
    // Sum out letters private to one operand (and take diagonals) first.
    auto reduce = [&](DenseTensor& t, std::string& s, std::string_view other) {
        const std::string keep = ordered_letters({s}, mask_of(other) | out_mask);
        if (keep != s || has_repeats(s)) {
            const DenseTensor* ptr = &t;
            t = loop_contract({s}, {ptr}, keep, dims);
            s = keep;
        }
    };
    reduce(a, sa, sb);
    reduce(b, sb, sa);

    const LetterMask ma = mask_of(sa);
    const LetterMask mb = mask_of(sb);
    std::string batch, free_a, free_b, summed;
    for (char ch : out) {
        const LetterMask bit = LetterMask{1} << letter_bit(ch);
        if ((ma & bit) && (mb & bit)) batch.push_back(ch);
        else if (ma & bit) free_a.push_back(ch);
        else if (mb & bit) free_b.push_back(ch);
    }
    for (char ch : sa) {
        const LetterMask bit = LetterMask{1} << letter_bit(ch);
        if ((mb & bit) && !(out_mask & bit)) summed.push_back(ch);
    }
    auto extent = [&](const std::string& s) {
        std::size_t n = 1;
        for (char ch : s) n *= dims.at(ch);
        return n;
    };
    const std::size_t nb = extent(batch), ni = extent(free_a), nj = extent(free_b), nk = extent(summed);

    const DenseTensor pa = permute_letters(a, sa, batch + free_a + summed);
    const DenseTensor pb = permute_letters(b, sb, batch + summed + free_b);
    const auto va = pa.values();
    const auto vb = pb.values();

    const std::string c_letters = batch + free_a + free_b;
    Shape c_shape;
    for (char ch : c_letters) c_shape.push_back(dims.at(ch));
    DenseTensor c(c_shape);
    auto vc = c.mutable_values();
    for (std::size_t ib = 0; ib < nb; ++ib) {
        const double* ab = va.data() + ib * ni * nk;
        const double* bb = vb.data() + ib * nk * nj;
        double* cb = vc.data() + ib * ni * nj;
        for (std::size_t i = 0; i < ni; ++i) {
            double* crow = cb + i * nj;
            for (std::size_t k = 0; k < nk; ++k) {
                const double aik = ab[i * nk + k];
                const double* brow = bb + k * nj;
                for (std::size_t j = 0; j < nj; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return permute_letters(c, c_letters, out);
}

/// Result subscripts of a step: the letters still needed by the remaining
/// operands or the output, in first-appearance order; the output itself for
/// the last step.
std::string step_result(const std::vector<std::string_view>& step_subs,
                        const std::vector<std::string>& remaining, std::string_view output) {
    if (remaining.empty()) return std::string(output);
    LetterMask needed = mask_of(output);
    for (const auto& s : remaining) needed |= mask_of(s);
    return ordered_letters(step_subs, needed);
}

void validate_step(const std::vector<std::size_t>& step, std::size_t current) {
    if (step.empty()) throw PathError("empty contraction step");
    for (std::size_t k = 0; k < step.size(); ++k) {
        if (step[k] >= current) {
            throw PathError("step position " + std::to_string(step[k]) +
                            " outside operand list of size " + std::to_string(current));
        }
        for (std::size_t m = 0; m < k; ++m) {
            if (step[m] == step[k]) throw PathError("step repeats operand position");
        }
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (k) out += sep;
        out += parts[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Path search
// ---------------------------------------------------------------------------

ContractionPath greedy_path(const EinsumSpec& spec) {
    const std::size_t n = spec.inputs.size();
    if (n == 1) return {{{0}}};
    if (n == 2) return {{{0, 1}}};

    std::vector<LetterMask> sets;
    for (const auto& s : spec.inputs) sets.push_back(mask_of(s));
    const LetterMask output = mask_of(spec.output);
    LetterMask all = 0;
    for (auto m : sets) all |= m;
    if (all == output) {
        std::vector<std::size_t> every(n);
        for (std::size_t k = 0; k < n; ++k) every[k] = k;
        return {{every}};
    }

    std::size_t memory_limit = mask_size(output, spec.dims);
    for (auto m : sets) memory_limit = std::max(memory_limit, mask_size(m, spec.dims));
    const FlopCount naive_cost = mask_flops(all, (all & ~output) != 0, n, spec.dims);

    struct Candidate {
        std::int64_t neg_removed;
        FlopCount cost;
        std::size_t x, y;
    };
    FlopCount path_cost = 0;

    auto parse = [&](std::size_t x, std::size_t y) -> std::optional<Candidate> {
        LetterMask remain = output;
        for (std::size_t k = 0; k < sets.size(); ++k) {
            if (k != x && k != y) remain |= sets[k];
        }
        const LetterMask contract = sets[x] | sets[y];
        const LetterMask result = remain & contract;
        const LetterMask removed = contract & ~result;
        const std::size_t new_size = mask_size(result, spec.dims);
        if (new_size > memory_limit) return std::nullopt;
        const auto removed_size = static_cast<std::int64_t>(mask_size(sets[x], spec.dims)) +
                                  static_cast<std::int64_t>(mask_size(sets[y], spec.dims)) -
                                  static_cast<std::int64_t>(new_size);
        const FlopCount cost = mask_flops(contract, removed != 0, 2, spec.dims);
        if (path_cost + cost > naive_cost) return std::nullopt;
        return Candidate{-removed_size, cost, x, y};
    };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = x + 1; y < n; ++y) pairs.emplace_back(x, y);
    }
    std::vector<Candidate> known;
    ContractionPath path;
    for (std::size_t iteration = 0; iteration + 1 < n; ++iteration) {
        for (auto [x, y] : pairs) {
            if ((sets[x] & sets[y]) == 0) continue;
            if (auto c = parse(x, y)) known.push_back(*c);
        }
        if (known.empty()) {
            for (std::size_t x = 0; x < sets.size(); ++x) {
                for (std::size_t y = x + 1; y < sets.size(); ++y) {
                    if (auto c = parse(x, y)) known.push_back(*c);
                }
            }
            if (known.empty()) {
                std::vector<std::size_t> rest(sets.size());
                for (std::size_t k = 0; k < rest.size(); ++k) rest[k] = k;
                path.steps.push_back(rest);
                break;
            }
        }
        auto best_it = std::min_element(known.begin(), known.end(), [](const auto& l, const auto& r) {
            return std::tie(l.neg_removed, l.cost) < std::tie(r.neg_removed, r.cost);
        });
        const Candidate best = *best_it;

        std::vector<Candidate> updated;
        for (const auto& c : known) {
            if (c.x == best.x || c.x == best.y || c.y == best.x || c.y == best.y) continue;
            auto shift = [&](std::size_t p) {
                return p - static_cast<std::size_t>(p > best.x) - static_cast<std::size_t>(p > best.y);
            };
            updated.push_back({c.neg_removed, c.cost, shift(c.x), shift(c.y)});
        }
        known = std::move(updated);

        LetterMask remain = output;
        for (std::size_t k = 0; k < sets.size(); ++k) {
            if (k != best.x && k != best.y) remain |= sets[k];
        }
        const LetterMask result = remain & (sets[best.x] | sets[best.y]);
        sets.erase(sets.begin() + static_cast<std::ptrdiff_t>(best.y));
        sets.erase(sets.begin() + static_cast<std::ptrdiff_t>(best.x));
        sets.push_back(result);

        pairs.clear();
        const std::size_t new_pos = sets.size() - 1;
        for (std::size_t x = 0; x < new_pos; ++x) pairs.emplace_back(x, new_pos);

        path.steps.push_back({best.x, best.y});
        path_cost += best.cost;
    }
    return path;
}

constexpr std::size_t max_optimal_operands = 14;

ContractionPath optimal_path(const EinsumSpec& spec) {
    const std::size_t n = spec.inputs.size();
    if (n == 1) return {{{0}}};
    if (n == 2) return {{{0, 1}}};
    if (n > max_optimal_operands) return greedy_path(spec);

    const std::uint32_t full = (std::uint32_t{1} << n) - 1;
    std::vector<LetterMask> leaf(n);
    for (std::size_t k = 0; k < n; ++k) leaf[k] = mask_of(spec.inputs[k]);
    const LetterMask output = mask_of(spec.output);

    std::vector<LetterMask> letters(full + 1, 0);
    for (std::uint32_t s = 1; s <= full; ++s) {
        const int low = std::countr_zero(s);
        letters[s] = letters[s & (s - 1)] | leaf[static_cast<std::size_t>(low)];
    }
    // Letters carried by the tensor that represents subset s.
    auto current = [&](std::uint32_t s) {
        if (std::popcount(s) == 1) return letters[s];
        if (s == full) return output;
        return letters[s] & (letters[full & ~s] | output);
    };

    struct Best {
        FlopCount flops = std::numeric_limits<FlopCount>::max();
        std::size_t largest = 0;
        std::uint32_t split = 0;
    };
    std::vector<Best> best(full + 1);
    for (std::size_t k = 0; k < n; ++k) best[std::uint32_t{1} << k] = {0, 0, 0};

    std::vector<std::uint32_t> by_size(full);
    for (std::uint32_t s = 1; s <= full; ++s) by_size[s - 1] = s;
    std::stable_sort(by_size.begin(), by_size.end(),
                     [](auto l, auto r) { return std::popcount(l) < std::popcount(r); });

    for (auto s : by_size) {
        if (std::popcount(s) < 2) continue;
        const std::uint32_t low = s & (~s + 1);
        const std::uint32_t rest = s & ~low;
        const LetterMask result = current(s);
        const std::size_t result_size = mask_size(result, spec.dims);
        // Enumerate splits whose first part holds the lowest operand.
        for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
            const std::uint32_t a = sub | low;
            const std::uint32_t b = s & ~a;
            if (b != 0) {
                const LetterMask step = current(a) | current(b);
                const FlopCount flops = best[a].flops + best[b].flops +
                                        mask_flops(step, (step & ~result) != 0, 2, spec.dims);
                const std::size_t largest = std::max({best[a].largest, best[b].largest, result_size});
                if (flops < best[s].flops || (flops == best[s].flops && largest < best[s].largest)) {
                    best[s] = {flops, largest, a};
                }
            }
            if (sub == 0) break;
        }
    }

    ContractionPath path;
    std::vector<std::size_t> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[k] = k;
    std::size_t next_id = n;
    std::function<std::size_t(std::uint32_t)> emit = [&](std::uint32_t s) -> std::size_t {
        if (std::popcount(s) == 1) return static_cast<std::size_t>(std::countr_zero(s));
        const std::size_t ia = emit(best[s].split);
        const std::size_t ib = emit(s & ~best[s].split);
        auto pa = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), ia) - ids.begin());
        auto pb = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), ib) - ids.begin());
        if (pa > pb) std::swap(pa, pb);
        path.steps.push_back({pa, pb});
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(pb));
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(pa));
        ids.push_back(next_id);
        return next_id++;
    };
    emit(full);
    return path;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

std::string EinsumSpec::str() const { return join(inputs, ",") + "->" + output; }

std::string EinsumSpec::letters() const {
    std::vector<std::string_view> subs(inputs.begin(), inputs.end());
    return ordered_letters(subs, ~LetterMask{0});
}

Shape EinsumSpec::shape_of(std::string_view subscripts) const {
    Shape shape;
    for (char ch : subscripts) shape.push_back(dims.at(ch));
    return shape;
}

EinsumSpec parse_spec(std::string_view expr_in, std::span<const Shape> operand_shapes) {
    const std::string expr = strip_spaces(expr_in);
    EinsumSpec spec;
    const auto arrow = expr.find("->");
    const std::string lhs = expr.substr(0, arrow);
    if (arrow != std::string::npos && expr.find("->", arrow + 2) != std::string::npos) {
        throw ParseError("expression '" + expr + "' has more than one '->'");
    }
    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        spec.inputs.push_back(lhs.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    auto check_letters = [&](const std::string& s) {
        for (char ch : s) {
            if (!std::isalpha(static_cast<unsigned char>(ch))) {
                throw ParseError("invalid character '" + std::string(1, ch) + "' in '" + expr + "'");
            }
        }
    };
    for (const auto& s : spec.inputs) check_letters(s);
    if (spec.inputs.size() != operand_shapes.size()) {
        throw ShapeError("expression '" + expr + "' has " + std::to_string(spec.inputs.size()) +
                         " operands, got " + std::to_string(operand_shapes.size()));
    }
    for (std::size_t op = 0; op < spec.inputs.size(); ++op) {
        const auto& s = spec.inputs[op];
        const auto& shape = operand_shapes[op];
        if (s.size() != shape.size()) {
            throw ShapeError("operand " + std::to_string(op) + " '" + s + "' has rank " +
                             std::to_string(s.size()) + " but shape " + shape_str(shape));
        }
        for (std::size_t ax = 0; ax < s.size(); ++ax) {
            auto [it, inserted] = spec.dims.emplace(s[ax], shape[ax]);
            if (!inserted && it->second != shape[ax]) {
                throw ShapeError("index '" + std::string(1, s[ax]) + "' has extents " +
                                 std::to_string(it->second) + " and " + std::to_string(shape[ax]));
            }
        }
    }
    if (arrow != std::string::npos) {
        spec.output = expr.substr(arrow + 2);
        check_letters(spec.output);
        if (has_repeats(spec.output)) throw ParseError("output '" + spec.output + "' repeats an index");
        for (char ch : spec.output) {
            if (!spec.dims.contains(ch)) {
                throw ParseError("output index '" + std::string(1, ch) + "' not in any input");
            }
        }
    } else {
        std::map<char, int> counts;
        for (const auto& s : spec.inputs) {
            for (char ch : s) ++counts[ch];
        }
        for (auto [ch, count] : counts) {
            if (count == 1) spec.output.push_back(ch);
        }
    }
    return spec;
}

EinsumSpec parse_spec(std::string_view expr, std::span<const DenseTensor> operands) {
    std::vector<Shape> shapes;
    shapes.reserve(operands.size());
    for (const auto& t : operands) shapes.push_back(t.shape());
    return parse_spec(expr, std::span<const Shape>(shapes));
}

std::string ContractionPath::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (k) os << ", ";
        os << '(';
        for (std::size_t m = 0; m < steps[k].size(); ++m) {
            if (m) os << ", ";
            os << steps[k][m];
        }
        if (steps[k].size() == 1) os << ',';
        os << ')';
    }
    os << ']';
    return os.str();
}

FlopCount step_flops(std::string_view indices, bool has_summed, std::size_t n_terms,
                     const DimMap& dims) {
    if (n_terms == 0) throw ArgumentError("step_flops needs at least one term");
    return mask_flops(mask_of(indices), has_summed, n_terms, dims);
}

std::size_t CostReport::optimized_scaling() const {
    std::size_t s = 0;
    for (const auto& step : per_step) s = std::max(s, step.scaling);
    return s;
}

std::string to_string(PathStrategy strategy) {
    switch (strategy) {
        case PathStrategy::naive: return "naive";
        case PathStrategy::greedy: return "greedy";
        case PathStrategy::optimal: return "optimal";
    }
    return "?";
}

PathStrategy path_strategy_from_string(std::string_view name) {
    if (name == "naive") return PathStrategy::naive;
    if (name == "greedy") return PathStrategy::greedy;
    if (name == "optimal") return PathStrategy::optimal;
    throw ArgumentError("unknown path strategy '" + std::string(name) + "'");
}

FlopCount naive_flops(const EinsumSpec& spec) {
    LetterMask all = 0;
    for (const auto& s : spec.inputs) all |= mask_of(s);
    const LetterMask output = mask_of(spec.output);
    return mask_flops(all, (all & ~output) != 0, spec.inputs.size(), spec.dims);
}

CostReport score_path(const EinsumSpec& spec, const ContractionPath& path) {
    CostReport report;
    report.naive_flops = naive_flops(spec);
    report.naive_scaling = spec.letters().size();
    std::vector<std::string> subs = spec.inputs;
    for (const auto& step : path.steps) {
        validate_step(step, subs.size());
        std::vector<std::string_view> step_subs;
        std::vector<std::string> remaining;
        for (auto p : step) step_subs.push_back(subs[p]);
        for (std::size_t k = 0; k < subs.size(); ++k) {
            if (std::find(step.begin(), step.end(), k) == step.end()) remaining.push_back(subs[k]);
        }
        const std::string result = step_result(step_subs, remaining, spec.output);
        LetterMask contract = 0;
        for (auto s : step_subs) contract |= mask_of(s);
        const bool summed = (contract & ~mask_of(result)) != 0;

        StepCost cost;
        cost.scaling = static_cast<std::size_t>(std::popcount(contract));
        cost.has_summed = summed;
        cost.flops = mask_flops(contract, summed, step.size(), spec.dims);
        std::vector<std::string> parts(step_subs.begin(), step_subs.end());
        cost.subscripts = join(parts, ",") + "->" + result;
        remaining.push_back(result);
        cost.remaining = join(remaining, ",") + "->" + spec.output;
        report.path_flops += cost.flops;
        report.largest_intermediate =
            std::max(report.largest_intermediate, mask_size(mask_of(result), spec.dims));
        report.per_step.push_back(std::move(cost));
        subs = std::move(remaining);
    }
    if (subs.size() != 1) {
        throw PathError("path leaves " + std::to_string(subs.size()) + " operands instead of one");
    }
    report.largest_intermediate =
        std::max(report.largest_intermediate, mask_size(mask_of(spec.output), spec.dims));
    return report;
}

std::pair<ContractionPath, CostReport> optimize_path(const EinsumSpec& spec, PathStrategy strategy) {
    ContractionPath path;
    switch (strategy) {
        case PathStrategy::naive: {
            std::vector<std::size_t> every(spec.inputs.size());
            for (std::size_t k = 0; k < every.size(); ++k) every[k] = k;
            path.steps.push_back(std::move(every));
            break;
        }
        case PathStrategy::greedy: path = greedy_path(spec); break;
        case PathStrategy::optimal: path = optimal_path(spec); break;
    }
    auto report = score_path(spec, path);
    return {std::move(path), std::move(report)};
}

DenseTensor naive_contract(const EinsumSpec& spec, std::span<const DenseTensor> operands) {
    if (operands.size() != spec.inputs.size()) {
        throw ShapeError("spec has " + std::to_string(spec.inputs.size()) + " operands, got " +
                         std::to_string(operands.size()));
    }
    std::vector<std::string_view> subs(spec.inputs.begin(), spec.inputs.end());
    std::vector<const DenseTensor*> ptrs;
    for (std::size_t k = 0; k < operands.size(); ++k) {
        if (operands[k].shape() != spec.shape_of(spec.inputs[k])) {
            throw ShapeError("operand " + std::to_string(k) + " shape " +
                             shape_str(operands[k].shape()) + " does not match '" +
                             spec.inputs[k] + "'");
        }
        ptrs.push_back(&operands[k]);
    }
    return loop_contract(subs, ptrs, spec.output, spec.dims);
}

DenseTensor execute_path(const EinsumSpec& spec, std::span<const DenseTensor> operands,
                         const ContractionPath& path) {
    if (operands.size() != spec.inputs.size()) {
        throw ShapeError("spec has " + std::to_string(spec.inputs.size()) + " operands, got " +
                         std::to_string(operands.size()));
    }
    std::vector<DenseTensor> ops(operands.begin(), operands.end());
    std::vector<std::string> subs = spec.inputs;
    for (std::size_t k = 0; k < ops.size(); ++k) {
        if (ops[k].shape() != spec.shape_of(subs[k])) {
            throw ShapeError("operand " + std::to_string(k) + " shape " + shape_str(ops[k].shape()) +
                             " does not match '" + subs[k] + "'");
        }
    }
    for (const auto& step : path.steps) {
        validate_step(step, ops.size());
        std::vector<std::string_view> step_subs;
        std::vector<std::string> remaining;
        for (auto p : step) step_subs.push_back(subs[p]);
        for (std::size_t k = 0; k < subs.size(); ++k) {
            if (std::find(step.begin(), step.end(), k) == step.end()) remaining.push_back(subs[k]);
        }
        const std::string result_subs = step_result(step_subs, remaining, spec.output);

        DenseTensor result;
        if (step.size() == 2) {
            result = contract_pair(ops[step[0]], subs[step[0]], ops[step[1]], subs[step[1]],
                                   result_subs, spec.dims);
        } else {
            std::vector<const DenseTensor*> ptrs;
            for (auto p : step) ptrs.push_back(&ops[p]);
            result = loop_contract(step_subs, ptrs, result_subs, spec.dims);
        }

        std::vector<std::size_t> sorted(step);
        std::sort(sorted.rbegin(), sorted.rend());
        for (auto p : sorted) {
            ops.erase(ops.begin() + static_cast<std::ptrdiff_t>(p));
            subs.erase(subs.begin() + static_cast<std::ptrdiff_t>(p));
        }
        ops.push_back(std::move(result));
        subs.push_back(result_subs);
    }
    if (ops.size() != 1) {
        throw PathError("path leaves " + std::to_string(ops.size()) + " operands instead of one");
    }
    if (subs[0] != spec.output) {
        const DenseTensor* ptr = &ops[0];
        return loop_contract({subs[0]}, {ptr}, spec.output, spec.dims);
    }
    return ops[0].contiguous();
}

std::string format_sci(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", value);
    std::string s(buf);
    const auto e = s.find('e');
    if (e == std::string::npos) return s;
    const int exponent = std::stoi(s.substr(e + 1));
    return s.substr(0, e + 1) + (exponent < 0 ? "-" : "+") + std::to_string(std::abs(exponent));
}

std::string explain(const EinsumSpec& spec, const ContractionPath& path) {
    const CostReport report = score_path(spec, path);
    auto pad = [](std::string_view s, std::size_t width) {
        return std::string(width > s.size() ? width - s.size() : 0, ' ') + std::string(s);
    };
    std::ostringstream os;
    os << "  Complete contraction:  " << spec.str() << '\n'
       << "         Naive scaling:  " << report.naive_scaling << '\n'
       << "     Optimized scaling:  " << report.optimized_scaling() << '\n'
       << "      Naive FLOP count:  " << format_sci(static_cast<double>(report.naive_flops)) << '\n'
       << "  Optimized FLOP count:  " << format_sci(static_cast<double>(report.path_flops)) << '\n'
       << "   Theoretical speedup:  " << format_sci(report.speedup()) << '\n'
       << "  Largest intermediate:  "
       << format_sci(static_cast<double>(report.largest_intermediate)) << " elements\n"
       << std::string(80, '-') << '\n'
       << pad("scaling", 6) << ' ' << pad("BLAS", 11) << ' ' << pad("current", 22) << ' '
       << pad("remaining", 37) << '\n'
       << std::string(80, '-');
    for (std::size_t k = 0; k < report.per_step.size(); ++k) {
        const auto& step = report.per_step[k];
        const std::string kernel =
            path.steps[k].size() == 2 ? (step.has_summed ? "GEMM" : "OUTER") : "LOOP";
        os << '\n'
           << pad(std::to_string(step.scaling), 4) << ' ' << pad(kernel, 14) << ' '
           << pad(step.subscripts, 22) << ' ' << pad(step.remaining, 37);
    }
    os << '\n';
    return os.str();
}

std::string explain(const EinsumSpec& spec, PathStrategy strategy) {
    return explain(spec, optimize_path(spec, strategy).first);
}

}  // namespace einform
