#pragma once

#include "einform/problem.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace einform {

/// One form/order/size/mode/strategy/layout combination and its timings.
struct RunRecord {
    StudyForm form = StudyForm::dot;
    int order = 1;
    std::size_t n_cells = 0;
    EvalMode mode = EvalMode::residual;
    Strategy strategy = Strategy::optimal;
    std::string layout;
    std::size_t repeats = 0;
    std::vector<double> elapsed;  ///< seconds, one per repeat
    std::size_t result_bytes = 0;
    FlopCount naive_flops = 0;
    FlopCount path_flops = 0;
    std::size_t largest_intermediate = 0;
    bool failed = false;
    std::string error;  ///< why a failed combination did not run

    double t_ww() const;             ///< mean without the worst sample
    double throughput_mb_s() const;  ///< result_bytes / 2^20 / t_ww
};

/// Mean of all samples but the largest; ArgumentError for fewer than two.
double mean_without_worst(const std::vector<double>& samples);

struct StudyConfig {
    std::vector<StudyForm> forms = all_study_forms();
    std::vector<int> orders{1, 2, 3};
    std::vector<std::size_t> cells{128, 256, 512, 1024, 2048, 4096};
    std::vector<EvalMode> modes{EvalMode::residual, EvalMode::matrix};
    std::vector<Strategy> strategies{Strategy::optimal, Strategy::reference};
    std::vector<std::string> layouts{std::string(LayoutSpec::default_layout)};
    std::size_t repeats = 5;
    std::size_t threads = 1;
    std::uint64_t seed = 42;
    double max_mb = 1024.0;            ///< combinations estimated above this are recorded as failed
    double max_naive_flops = 2e10;     ///< same for the naive strategy's loop cost

    /// Throws ArgumentError for repeats < 2, empty lists, orders outside 1..3
    /// or cell counts outside 1..4096.
    void validate() const;
};

/// Receives every successful record with the result of its last repeat.
using ResultSink = std::function<void(const RunRecord&, const DenseTensor&)>;

/// Sweeps the configuration sequentially. Failures (memory or flop budget,
/// allocation failure, library errors) become failed records. The reference
/// strategy ignores layouts and runs once per combination with layout "-".
std::vector<RunRecord> run_study(const StudyConfig& config, const ResultSink& sink = {});

/// Axis classes used by the form's operands, in default-layout order
/// (Laplacian "cqgd", convection "cqgvd").
std::string layout_group(StudyForm form);

/// Every permutation of the form's layout group, written into the group's
/// slots of the default layout; unused classes keep their place, so the
/// default layout appears exactly once.
std::vector<std::string> sweep_layouts(StudyForm form);

/// run_study over sweep_layouts(form) for one order and size; the config's
/// modes, strategies, repeats and seed apply.
std::vector<RunRecord> layout_sweep(StudyForm form, int order, std::size_t n_cells, StudyConfig config,
                                    const ResultSink& sink = {});

/// T_ww(reference) / T_ww(record) for the reference run with the same form,
/// order, size and mode; NaN when there is none.
double speedup_vs_reference(const RunRecord& record, const std::vector<RunRecord>& records);

inline constexpr const char* csv_header =
    "form,order,n_cells,mode,strategy,layout,t_ww,throughput_mb_s,naive_flops,path_flops,"
    "largest_intermediate,speedup_vs_reference";

/// CSV with csv_header; timing fields are empty for failed records.
void write_csv(std::ostream& os, const std::vector<RunRecord>& records);
/// Throws IoError when `path` cannot be written.
void write_csv(const std::string& path, const std::vector<RunRecord>& records);

/// Aligned human-readable table.
void write_table(std::ostream& os, const std::vector<RunRecord>& records);

/// Sizes of a study form without building data: (order+1)^3 points and dofs.
SizeContext study_sizes(int order, std::size_t n_cells);

struct FlopPoint {
    StudyForm form;
    int order;
    EvalMode mode;
    double naive_per_cell;
    double greedy_per_cell;
    double optimal_per_cell;
};

/// Cost-model flops per cell against order (cost model only, so orders up to 5).
std::vector<FlopPoint> flops_per_cell(const std::vector<StudyForm>& forms, const std::vector<int>& orders,
                                      EvalMode mode, std::size_t n_cells = 1024);

/// "form,order,mode,naive_flops_per_cell,greedy_flops_per_cell,optimal_flops_per_cell".
void write_flops_csv(std::ostream& os, const std::vector<FlopPoint>& points);

}  // namespace einform
