#include "einform/study.hpp"

#include "einform/error.hpp"
#include "einform/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <new>
#include <ostream>
#include <sstream>

namespace einform {

namespace {

PathStrategy cost_strategy(Strategy s) {
    if (s == Strategy::naive || s == Strategy::reference) return PathStrategy::naive;
    if (s == Strategy::greedy) return PathStrategy::greedy;
    return PathStrategy::optimal;
}

// Bytes held at the peak: every operand, the result and the largest intermediate.
double estimate_bytes(const TranspiledEinsum& t, const SizeContext& sizes, const CostSummary& cost) {
    double elems = static_cast<double>(shape_size(output_shape(t, sizes))) * 2.0;
    for (const auto& part : t.parts) {
        const auto dims = letter_dims(part, sizes);
        for (const auto& op : part.operands) elems += static_cast<double>(shape_size(operand_shape(op, dims)));
    }
    elems += static_cast<double>(cost.largest_intermediate);
    return elems * sizeof(double);
}

std::string fmt(double x) {
    if (!std::isfinite(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace

double mean_without_worst(const std::vector<double>& samples) {
    if (samples.size() < 2) throw ArgumentError("mean without worst needs at least two samples");
    double sum = 0.0;
    for (double x : samples) sum += x;
    sum -= *std::max_element(samples.begin(), samples.end());
    return sum / static_cast<double>(samples.size() - 1);
}

double RunRecord::t_ww() const {
    if (failed || elapsed.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return mean_without_worst(elapsed);
}

double RunRecord::throughput_mb_s() const {
    return static_cast<double>(result_bytes) / (1024.0 * 1024.0) / t_ww();
}

void StudyConfig::validate() const {
    if (repeats < 2) throw ArgumentError("repeats must be at least 2");
    if (forms.empty() || orders.empty() || cells.empty() || modes.empty() || strategies.empty() ||
        layouts.empty()) {
        throw ArgumentError("every sweep dimension needs at least one value");
    }
    for (int p : orders) {
        if (p < 1 || p > 3) throw ArgumentError("evaluated orders are 1..3, got " + std::to_string(p));
    }
    for (auto n : cells) {
        if (n < 1 || n > 4096) throw ArgumentError("cell counts are 1..4096, got " + std::to_string(n));
    }
    for (const auto& l : layouts) parse_class_layout(l);
}

std::vector<RunRecord> run_study(const StudyConfig& config, const ResultSink& sink) {
    config.validate();
    using clock = std::chrono::steady_clock;
    std::vector<RunRecord> records;
    for (auto form : config.forms) {
        for (int order : config.orders) {
            for (auto n_cells : config.cells) {
                std::optional<FormData> data;
                for (auto mode : config.modes) {
                    for (auto strategy : config.strategies) {
                        const bool is_ref = strategy == Strategy::reference;
                        const auto layouts = is_ref ? std::vector<std::string>{"-"} : config.layouts;
                        for (const auto& layout : layouts) {
                            RunRecord r;
                            r.form = form;
                            r.order = order;
                            r.n_cells = n_cells;
                            r.mode = mode;
                            r.strategy = strategy;
                            r.layout = layout;
                            r.repeats = config.repeats;
                            const auto sizes = study_sizes(order, n_cells);
                            const auto probe = transpile_study(form, mode, is_ref ? LayoutSpec::default_layout
                                                                                  : std::string_view(layout));
                            const auto cost = cost_summary(probe, sizes, cost_strategy(strategy));
                            r.naive_flops = cost.naive_flops;
                            r.path_flops = cost.path_flops;
                            r.largest_intermediate = cost.largest_intermediate;
                            r.result_bytes = shape_size(output_shape(probe, sizes)) * sizeof(double);

                            const double mb = estimate_bytes(probe, sizes, cost) / (1024.0 * 1024.0);
                            if (mb > config.max_mb) {
                                r.failed = true;
                                r.error = "estimated " + fmt(mb) + " MB exceeds the " + fmt(config.max_mb) +
                                          " MB budget";
                            } else if (strategy == Strategy::naive &&
                                       static_cast<double>(cost.naive_flops) > config.max_naive_flops) {
                                r.failed = true;
                                r.error = "naive loop of " + fmt(double(cost.naive_flops)) +
                                          " flops exceeds the budget";
                            }
                            if (!r.failed) {
                                try {
                                    if (!data) data = make_study_data(form, order, n_cells, config.seed);
                                    DenseTensor last;
                                    for (std::size_t k = 0; k < config.repeats; ++k) {
                                        const auto t0 = clock::now();
                                        if (is_ref) {
                                            last = reference_evaluate(form, mode, *data);
                                        } else {
                                            const auto t = transpile_study(form, mode, layout);
                                            last = evaluate(t, *data, {strategy, config.threads});
                                        }
                                        const std::chrono::duration<double> dt = clock::now() - t0;
                                        r.elapsed.push_back(std::max(dt.count(), 1e-9));
                                    }
                                    if (sink) sink(r, last);
                                } catch (const std::bad_alloc&) {
                                    r.failed = true;
                                    r.error = "out of memory";
                                    r.elapsed.clear();
                                } catch (const Error& e) {
                                    r.failed = true;
                                    r.error = e.what();
                                    r.elapsed.clear();
                                }
                            }
                            records.push_back(std::move(r));
                        }
                    }
                }
            }
        }
    }
    return records;
}

std::string layout_group(StudyForm form) {
    std::string used;
    for (auto mode : {EvalMode::residual, EvalMode::matrix}) {
        for (const auto& part : transpile_study(form, mode).parts) {
            for (const auto& op : part.operands) {
                if (!op.layout_fixed()) used += op.classes;
            }
        }
    }
    std::string group;
    for (char ch : LayoutSpec::default_layout) {
        if (used.find(ch) != std::string::npos) group += ch;
    }
    return group;
}

std::vector<std::string> sweep_layouts(StudyForm form) {
    std::string group = layout_group(form);
    const std::string base(LayoutSpec::default_layout);
    std::sort(group.begin(), group.end());
    std::vector<std::string> out;
    do {
        std::string layout = base;
        std::size_t next = 0;
        for (auto& ch : layout) {
            if (group.find(ch) != std::string::npos) ch = group[next++];
        }
        out.push_back(layout);
    } while (std::next_permutation(group.begin(), group.end()));
    return out;
}

std::vector<RunRecord> layout_sweep(StudyForm form, int order, std::size_t n_cells, StudyConfig config,
                                    const ResultSink& sink) {
    config.forms = {form};
    config.orders = {order};
    config.cells = {n_cells};
    config.layouts = sweep_layouts(form);
    std::erase(config.strategies, Strategy::reference);
    if (config.strategies.empty()) config.strategies = {Strategy::optimal};
    return run_study(config, sink);
}

double speedup_vs_reference(const RunRecord& record, const std::vector<RunRecord>& records) {
    for (const auto& r : records) {
        if (r.strategy == Strategy::reference && !r.failed && r.form == record.form && r.order == record.order &&
            r.n_cells == record.n_cells && r.mode == record.mode) {
            return r.t_ww() / record.t_ww();
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
    os << csv_header << '\n';
    for (const auto& r : records) {
        os << to_string(r.form) << ',' << r.order << ',' << r.n_cells << ',' << to_string(r.mode) << ','
           << to_string(r.strategy) << ',' << r.layout << ',' << fmt(r.t_ww()) << ',' << fmt(r.throughput_mb_s())
           << ',' << r.naive_flops << ',' << r.path_flops << ',' << r.largest_intermediate << ','
           << fmt(speedup_vs_reference(r, records)) << '\n';
    }
}

void write_csv(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    write_csv(f, records);
    f.flush();
    if (!f) throw IoError("writing '" + path + "' failed");
}

void write_table(std::ostream& os, const std::vector<RunRecord>& records) {
    os << std::left << std::setw(8) << "form" << std::setw(6) << "order" << std::setw(7) << "cells" << std::setw(9)
       << "mode" << std::setw(10) << "strategy" << std::setw(8) << "layout" << std::right << std::setw(12)
       << "t_ww [s]" << std::setw(12) << "MB/s" << std::setw(12) << "naive" << std::setw(12) << "path"
       << std::setw(10) << "vs ref" << '\n';
    for (const auto& r : records) {
        os << std::left << std::setw(8) << to_string(r.form) << std::setw(6) << r.order << std::setw(7) << r.n_cells
           << std::setw(9) << to_string(r.mode) << std::setw(10) << to_string(r.strategy) << std::setw(8)
           << r.layout << std::right;
        if (r.failed) {
            os << "  failed: " << r.error << '\n';
            continue;
        }
        os << std::setw(12) << fmt(r.t_ww()) << std::setw(12) << fmt(r.throughput_mb_s()) << std::setw(12)
           << format_sci(double(r.naive_flops)) << std::setw(12) << format_sci(double(r.path_flops)) << std::setw(10)
           << fmt(speedup_vs_reference(r, records)) << '\n';
    }
}

SizeContext study_sizes(int order, std::size_t n_cells) {
    if (order < 1) throw ArgumentError("order must be positive");
    const std::size_t n = static_cast<std::size_t>(order + 1);
    SizeContext s;
    s.n_cells = n_cells;
    s.n_qp = n * n * n;
    s.dim = 3;
    s.n_dofs["u"] = s.n_qp;
    s.n_dofs["v"] = s.n_qp;
    return s;
}

std::vector<FlopPoint> flops_per_cell(const std::vector<StudyForm>& forms, const std::vector<int>& orders,
                                      EvalMode mode, std::size_t n_cells) {
    std::vector<FlopPoint> out;
    for (auto form : forms) {
        const auto t = transpile_study(form, mode);
        for (int order : orders) {
            const auto sizes = study_sizes(order, n_cells);
            const double nc = static_cast<double>(n_cells);
            const auto greedy = cost_summary(t, sizes, PathStrategy::greedy);
            const auto optimal = cost_summary(t, sizes, PathStrategy::optimal);
            out.push_back({form, order, mode, double(optimal.naive_flops) / nc, double(greedy.path_flops) / nc,
                           double(optimal.path_flops) / nc});
        }
    }
    return out;
}

void write_flops_csv(std::ostream& os, const std::vector<FlopPoint>& points) {
    os << "form,order,mode,naive_flops_per_cell,greedy_flops_per_cell,optimal_flops_per_cell\n";
    for (const auto& p : points) {
        os << to_string(p.form) << ',' << p.order << ',' << to_string(p.mode) << ',' << fmt(p.naive_per_cell) << ','
           << fmt(p.greedy_per_cell) << ',' << fmt(p.optimal_per_cell) << '\n';
    }
}

}  // namespace einform
