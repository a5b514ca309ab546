// Benchmark driver: forms x orders x cells x modes x strategies x layouts.
#include "einform/error.hpp"
#include "einform/study.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace einform;

namespace {

template <class T, class F>
std::vector<T> convert(const std::vector<std::string>& names, F from_string) {
    std::vector<T> out;
    for (const auto& n : names) out.push_back(from_string(n));
    return out;
}

void explain_form(StudyForm form, const StudyConfig& c) {
    const int order = c.orders.front();
    const auto sizes = study_sizes(order, c.cells.front());
    for (auto mode : c.modes) {
        const auto t = transpile_study(form, mode, c.layouts.front());
        std::cout << "== " << to_string(form) << ", " << to_string(mode) << " mode, order " << order << ", "
                  << sizes.n_cells << " cells, layout " << t.layout << "\n";
        std::cout << dump(t, sizes, PathStrategy::greedy) << "\n";
        for (const auto& part : t.parts) {
            std::cout << explain(part_spec(part, sizes), PathStrategy::optimal) << "\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-form einsum benchmark"};
    StudyConfig cfg;
    std::vector<std::string> forms, modes, strategies, layouts;
    bool sweep = false, quiet = false;
    std::string out, flops_out, explain_name;
    app.add_option("--forms", forms, "dot wdot laplace convect elastic")->delimiter(',');
    app.add_option("--orders", cfg.orders, "approximation orders (1..3)")->delimiter(',');
    app.add_option("--cells", cfg.cells, "cell counts (1..4096)")->delimiter(',');
    app.add_option("--modes", modes, "residual matrix eval")->delimiter(',');
    app.add_option("--strategies", strategies, "naive greedy optimal cell-loop threaded reference")->delimiter(',');
    app.add_option("--layouts", layouts, "global layout strings, e.g. cqgvd0")->delimiter(',');
    app.add_flag("--layout-sweep", sweep, "evaluate every permutation of each form's layout group");
    app.add_option("--repeats", cfg.repeats, "evaluations per combination (>= 2)")->capture_default_str();
    app.add_option("--threads", cfg.threads, "workers of the threaded strategy (0: all cores)")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed of DOF values and materials")->capture_default_str();
    app.add_option("--max-mb", cfg.max_mb, "memory estimate above which a combination is skipped")
        ->capture_default_str();
    app.add_option("--max-naive-flops", cfg.max_naive_flops, "flop budget of the naive strategy")
        ->capture_default_str();
    app.add_option("--out", out, "CSV output file");
    app.add_option("--flops-out", flops_out, "flops-per-cell against order (orders 1..5) as CSV");
    app.add_option("--explain", explain_name, "print the path report and transpilation dump of a form and exit");
    app.add_flag("-q,--quiet", quiet, "no table on stdout");
    CLI11_PARSE(app, argc, argv);

    try {
        if (!forms.empty()) cfg.forms = convert<StudyForm>(forms, study_form_from_string);
        if (!modes.empty()) cfg.modes = convert<EvalMode>(modes, eval_mode_from_string);
        if (!strategies.empty()) cfg.strategies = convert<Strategy>(strategies, strategy_from_string);
        if (!layouts.empty()) cfg.layouts = layouts;

        if (!explain_name.empty()) {
            explain_form(study_form_from_string(explain_name), cfg);
            return 0;
        }
        if (!flops_out.empty()) {
            std::ofstream f(flops_out);
            if (!f) throw IoError("cannot open '" + flops_out + "' for writing");
            for (auto mode : {EvalMode::residual, EvalMode::matrix}) {
                auto points = flops_per_cell(cfg.forms, {1, 2, 3, 4, 5}, mode);
                if (mode == EvalMode::residual) write_flops_csv(f, points);
                else {
                    std::ostringstream tmp;
                    write_flops_csv(tmp, points);
                    const auto s = tmp.str();
                    f << s.substr(s.find('\n') + 1);
                }
            }
        }

        cfg.validate();
        std::vector<RunRecord> records;
        if (sweep) {
            for (auto form : cfg.forms) {
                for (int order : cfg.orders) {
                    for (auto n : cfg.cells) {
                        auto r = layout_sweep(form, order, n, cfg);
                        records.insert(records.end(), r.begin(), r.end());
                    }
                }
            }
        } else {
            records = run_study(cfg);
        }
        if (!quiet) write_table(std::cout, records);
        if (!out.empty()) write_csv(out, records);
        std::size_t failed = 0;
        for (const auto& r : records) failed += r.failed;
        if (failed) std::cerr << failed << " of " << records.size() << " combinations failed\n";
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
