#pragma once

#include "tde/bandwidth.hpp"
#include "tde/densities.hpp"
#include "tde/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tde {

enum class Selector { Tde, TdeStable, Cv };

std::string_view to_string(Selector s) noexcept;
Selector parse_selector(std::string_view name);

/// Riemann sum of (f - f_hat)^2 against forward grid differences; the first
/// grid point carries no weight.
double ise(const DensityGrid& truth, const Sample& sample, double h, KernelKind kind);

/// Same sum for an already evaluated estimate on the truth grid.
double ise(const DensityGrid& truth, std::span<const double> estimate);

struct IseScan {
    std::vector<double> h;    // range / j for j = 1..n
    std::vector<double> ise;
    std::size_t best = 0;     // first minimum in grid order
};

/// ISE over the full candidate set {range / j : 1 <= j <= n}.
IseScan ise_scan(const DensityGrid& truth, const Sample& sample, KernelKind kind);

double empirical_h_opt(const DensityGrid& truth, const Sample& sample, KernelKind kind);

struct ExperimentConfig {
    std::size_t replicates = 250;
    std::vector<std::size_t> sample_sizes{25, 50, 100, 200, 500};
    std::vector<KernelKind> kernels{KernelKind::Gaussian, KernelKind::Epanechnikov};
    std::vector<Selector> selectors{Selector::Tde, Selector::Cv};
    std::vector<FamilyEntry> families = evaluation_suite();
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::vector<double> truth_grid = default_truth_grid();
    std::optional<std::size_t> bandwidth_count;  // forwarded to the selectors
};

void validate(const ExperimentConfig& cfg);

inline constexpr int kRecordSchemaVersion = 1;

struct RunRecord {
    std::string family;
    std::size_t family_index = 0;
    KernelKind kernel = KernelKind::Gaussian;
    Selector selector = Selector::Tde;
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;          // seed the replicate's sample was drawn from
    bool ok = true;
    std::string error;               // set when ok is false
    double h_hat = 0.0;
    double h_opt = 0.0;
    double h_diff = 0.0;
    double ise_hat = 0.0;
    double ise_opt = 0.0;
    double c45 = 0.0;                // -infinity when ise_hat == ise_opt
    std::size_t ucat = 0;            // unimodal category of the estimate
    std::size_t local_max = 0;       // local maxima of the estimate
    std::size_t true_ucat = 0;
    std::size_t true_local_max = 0;
    std::uint64_t kernel_evals = 0;  // selection-phase kernel evaluations
};

/// Sort key (n, family_index, replicate, kernel, selector).
bool record_less(const RunRecord& a, const RunRecord& b) noexcept;

using RecordSink = std::function<void(const RunRecord&)>;

/// Runs every (n, replicate, family) task, possibly in parallel. Records are
/// passed to the sink in sorted key order after all tasks finish, and are also
/// returned. Selector failures become records with ok == false.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RecordSink& sink = {});

/// Evaluates one task; exposed for tests.
std::vector<RunRecord> run_replicate(const ExperimentConfig& cfg, std::size_t family_index,
                                     std::size_t n, std::size_t replicate);

struct Quartiles {
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
};

struct SummaryRow {
    std::string family;
    std::size_t family_index = 0;
    KernelKind kernel = KernelKind::Gaussian;
    Selector selector = Selector::Tde;
    std::size_t n = 0;
    std::size_t runs = 0;      // successful records
    std::size_t failures = 0;
    double c1 = 0.0;           // mean(h_hat - h_opt)
    double c2 = 0.0;           // mean(ISE(h_hat))
    double c3 = 0.0;           // std(ISE(h_hat)), n - 1 normalization
    double c4 = 0.0;           // mean(delta^2), delta = ISE(h_hat) - ISE(h_opt)
    double c5 = 0.0;           // mean(|delta|)
    Quartiles h_diff;
    Quartiles ise_hat;
    Quartiles c45;             // over finite values only
    double ucat_correct = 0.0;
    double local_max_correct = 0.0;
};

/// One row per (family, kernel, selector, n), sorted by that key.
std::vector<SummaryRow> summarize(std::span<const RunRecord> records);

enum class Measure { HDiff, IseHat, C45, Ucat, LocalMax };

std::string_view to_string(Measure m) noexcept;
Measure parse_measure(std::string_view name);
std::vector<Measure> all_measures();

// Overlaid histograms of one measure for two selectors. Each matrix is
// bins x columns; the normalized matrices are column-normalized and then
// affinely rescaled to [0, 1].
struct HistogramMatrix {
    Measure measure = Measure::C45;
    Selector selector_a = Selector::Tde;
    Selector selector_b = Selector::Cv;
    std::vector<double> edges;                 // bins + 1 edges
    std::vector<std::string> columns;
    std::vector<std::vector<double>> counts_a; // [bin][column]
    std::vector<std::vector<double>> counts_b;
    std::vector<std::vector<double>> normalized_a;
    std::vector<std::vector<double>> normalized_b;

    std::size_t bins() const noexcept { return edges.empty() ? 0 : edges.size() - 1; }
};

// What a histogram's columns range over: sample sizes for one family, or
// families (e.g. m = 1..10 of one k) at one sample size.
struct HistogramRequest {
    Measure measure = Measure::C45;
    KernelKind kernel = KernelKind::Gaussian;
    Selector selector_a = Selector::Tde;
    Selector selector_b = Selector::Cv;
    std::vector<std::string> families;  // one family => columns are n
    std::optional<std::size_t> n;       // required when several families are given
    std::size_t bins = 50;
};

inline constexpr double kC45Lo = -4.0;
inline constexpr double kC45Hi = 0.25;

HistogramMatrix histogram_export(std::span<const RunRecord> records, const HistogramRequest& request);

// Serialization. Records are NDJSON with snake_case keys; a -infinity c45 is
// written as null.
std::string to_ndjson_line(const RunRecord& r);
RunRecord record_from_json_line(std::string_view line);
void write_records(std::ostream& os, std::span<const RunRecord> records);
std::vector<RunRecord> read_records(std::istream& is);

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);
void write_histogram_csv(std::ostream& os, const HistogramMatrix& h);
void write_histogram_svg(std::ostream& os, const HistogramMatrix& h, std::string_view title);

}  // namespace tde
