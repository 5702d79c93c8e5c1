#include "tde/harness.hpp"

#include "tde/error.hpp"
#include "tde/unimodal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>
#include <tuple>

namespace tde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cross-validated estimates are decomposed with a looser row-drop threshold.
const double kCvDropThreshold = std::sqrt(std::numeric_limits<double>::epsilon());

std::uint64_t hash_id(std::string_view id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double c45_from(double ise_hat, double ise_opt) {
    const double delta = std::abs(ise_hat - ise_opt);
    return delta == 0.0 ? kNegInf : std::log10(delta);
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Quartiles quartiles(const std::vector<double>& v) {
    return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)};
}

void fill_selection(RunRecord& rec, const ExperimentConfig& cfg, const Sample& x, const DensityGrid& truth,
                    KernelKind kind) {
    EvalCounter counter;
    SelectorOptions opts;
    opts.bandwidth_count = cfg.bandwidth_count;
    opts.counter = &counter;

    switch (rec.selector) {
        case Selector::Tde:
        case Selector::TdeStable: {
            const auto res = rec.selector == Selector::Tde ? tde_select(x, kind, opts)
                                                           : tde_select_stable_modes(x, kind, opts);
            rec.kernel_evals = counter.read();
            rec.h_hat = res.profile.h_hat;
            rec.ucat = res.profile.m_hat;
            rec.local_max = count_local_maxima(res.estimate.f);
            rec.ise_hat = ise(truth, x, rec.h_hat, kind);
            break;
        }
        case Selector::Cv: {
            const auto res = cv_select(x, kind, opts);
            rec.kernel_evals = counter.read();
            rec.h_hat = res.h;
            const auto est = kde_on_grid(x, rec.h_hat, truth.x, kind);
            rec.ucat = ucat(est.f, kCvDropThreshold);
            rec.local_max = count_local_maxima(est.f);
            rec.ise_hat = ise(truth, est.f);
            break;
        }
    }
}

template <class F>
void for_each_record_value(std::span<const RunRecord> records, Measure m, F&& f) {
    for (const auto& r : records) {
        double v = 0.0;
        switch (m) {
            case Measure::HDiff: v = r.h_diff; break;
            case Measure::IseHat: v = r.ise_hat; break;
            case Measure::C45: v = r.c45; break;
            case Measure::Ucat: v = static_cast<double>(r.ucat); break;
            case Measure::LocalMax: v = static_cast<double>(r.local_max); break;
        }
        f(r, v);
    }
}

void normalize_columns(std::vector<std::vector<double>>& a) {
    if (a.empty()) return;
    const std::size_t cols = a.front().size();
    for (std::size_t c = 0; c < cols; ++c) {
        double total = 0.0;
        for (const auto& row : a) total += row[c];
        if (total > 0.0) {
            for (auto& row : a) row[c] /= total;
        }
    }
}

void affine_unit(std::vector<std::vector<double>>& a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& row : a) {
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (a.empty() || a.front().empty()) return;
    const double denom = hi - lo + (lo == hi ? 1.0 : 0.0);
    for (auto& row : a) {
        for (double& v : row) v = (v - lo) / denom;
    }
}

}  // namespace

std::string_view to_string(Selector s) noexcept {
    switch (s) {
        case Selector::Tde: return "tde";
        case Selector::TdeStable: return "tde-stable";
        case Selector::Cv: return "cv";
    }
    return "tde";
}

Selector parse_selector(std::string_view name) {
    if (name == "tde") return Selector::Tde;
    if (name == "tde-stable") return Selector::TdeStable;
    if (name == "cv") return Selector::Cv;
    throw Error(ErrorCode::InvalidConfig, "unknown selector '" + std::string(name) + "'");
}

double ise(const DensityGrid& truth, std::span<const double> estimate) {
    if (estimate.size() != truth.f.size() || truth.x.size() != truth.f.size()) {
        throw Error(ErrorCode::InvalidGrid, "estimate and truth grids differ in size");
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < truth.x.size(); ++i) {
        const double d = truth.f[i] - estimate[i];
        acc += d * d * (truth.x[i] - truth.x[i - 1]);
    }
    return acc;
}

double ise(const DensityGrid& truth, const Sample& sample, double h, KernelKind kind) {
    return ise(truth, kde_on_grid(sample, h, truth.x, kind).f);
}

IseScan ise_scan(const DensityGrid& truth, const Sample& sample, KernelKind kind) {
    if (sample.range() == 0.0) throw Error(ErrorCode::DegenerateSample, "sample range is zero");
    IseScan out;
    out.h = make_bandwidth_grid(sample.range(), sample.size()).values;
    out.ise.reserve(out.h.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.h.size(); ++j) {
        out.ise.push_back(ise(truth, sample, out.h[j], kind));
        if (out.ise.back() < best) {
            best = out.ise.back();
            out.best = j;
        }
    }
    return out;
}

double empirical_h_opt(const DensityGrid& truth, const Sample& sample, KernelKind kind) {
    const auto scan = ise_scan(truth, sample, kind);
    return scan.h[scan.best];
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.replicates < 1) throw Error(ErrorCode::InvalidConfig, "number of replicates must be at least 1");
    if (cfg.sample_sizes.empty()) throw Error(ErrorCode::InvalidConfig, "no sample sizes given");
    for (auto n : cfg.sample_sizes) {
        if (n < 2) throw Error(ErrorCode::InvalidConfig, "sample sizes must be at least 2, got " + std::to_string(n));
    }
    if (cfg.kernels.empty()) throw Error(ErrorCode::InvalidConfig, "no kernels given");
    if (cfg.selectors.empty()) throw Error(ErrorCode::InvalidConfig, "no selectors given");
    if (cfg.families.empty()) throw Error(ErrorCode::InvalidConfig, "no families given");
    for (const auto& f : cfg.families) validate(f.spec);
    if (cfg.truth_grid.size() < 2) throw Error(ErrorCode::InvalidConfig, "truth grid needs at least two points");
    require_increasing(cfg.truth_grid);
    if (cfg.bandwidth_count && *cfg.bandwidth_count == 0) {
        throw Error(ErrorCode::InvalidConfig, "bandwidth count must be positive");
    }
}

bool record_less(const RunRecord& a, const RunRecord& b) noexcept {
    return std::tie(a.n, a.family_index, a.replicate, a.kernel, a.selector) <
           std::tie(b.n, b.family_index, b.replicate, b.kernel, b.selector);
}

std::vector<RunRecord> run_replicate(const ExperimentConfig& cfg, std::size_t family_index, std::size_t n,
                                     std::size_t replicate) {
    const auto& family = cfg.families.at(family_index);
    const std::uint64_t seed = Rng::derive_seed(cfg.seed, {hash_id(family.id), n, replicate});
    Rng rng(seed);
    const Sample x = sample(family.spec, n, rng);
    const DensityGrid truth = pdf_on_grid(family.spec, cfg.truth_grid);
    const std::size_t truth_ucat = ucat(truth.f);
    const std::size_t truth_lmax = count_local_maxima(truth.f);

    std::vector<RunRecord> out;
    for (KernelKind kind : cfg.kernels) {
        RunRecord base;
        base.family = family.id;
        base.family_index = family_index;
        base.kernel = kind;
        base.n = n;
        base.replicate = replicate;
        base.seed = seed;
        base.true_ucat = truth_ucat;
        base.true_local_max = truth_lmax;

        std::optional<IseScan> scan;
        std::string scan_error;
        try {
            scan = ise_scan(truth, x, kind);
        } catch (const Error& e) {
            scan_error = std::string(to_string(e.code())) + ": " + e.what();
        }

        for (Selector sel : cfg.selectors) {
            RunRecord rec = base;
            rec.selector = sel;
            if (!scan) {
                rec.ok = false;
                rec.error = scan_error;
                out.push_back(std::move(rec));
                continue;
            }
            rec.h_opt = scan->h[scan->best];
            rec.ise_opt = scan->ise[scan->best];
            try {
                fill_selection(rec, cfg, x, truth, kind);
                rec.h_diff = rec.h_hat - rec.h_opt;
                rec.c45 = c45_from(rec.ise_hat, rec.ise_opt);
            } catch (const Error& e) {
                rec.ok = false;
                rec.error = std::string(to_string(e.code())) + ": " + e.what();
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RecordSink& sink) {
    validate(cfg);
    struct Task {
        std::size_t family_index;
        std::size_t n;
        std::size_t replicate;
    };
    std::vector<Task> tasks;
    for (auto n : cfg.sample_sizes) {
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            for (std::size_t f = 0; f < cfg.families.size(); ++f) tasks.push_back({f, n, r});
        }
    }

    std::vector<std::vector<RunRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            results[i] = run_replicate(cfg, tasks[i].family_index, tasks[i].n, tasks[i].replicate);
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, tasks.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::vector<RunRecord> records;
    for (auto& chunk : results) {
        for (auto& r : chunk) records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(), record_less);
    if (sink) {
        for (const auto& r : records) sink(r);
    }
    return records;
}

std::vector<SummaryRow> summarize(std::span<const RunRecord> records) {
    if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no records to summarize");
    using Key = std::tuple<std::size_t, std::string, KernelKind, Selector, std::size_t>;
    std::map<Key, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) groups[{r.family_index, r.family, r.kernel, r.selector, r.n}].push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [key, group] : groups) {
        SummaryRow row;
        std::tie(row.family_index, row.family, row.kernel, row.selector, row.n) = key;
        std::vector<double> h_diff;
        std::vector<double> ise_hat;
        std::vector<double> c45;
        double d1 = 0.0;
        double d2 = 0.0;
        std::size_t ucat_hits = 0;
        std::size_t lmax_hits = 0;
        for (const RunRecord* r : group) {
            if (!r->ok) {
                ++row.failures;
                continue;
            }
            h_diff.push_back(r->h_diff);
            ise_hat.push_back(r->ise_hat);
            if (std::isfinite(r->c45)) c45.push_back(r->c45);
            const double delta = std::abs(r->ise_hat - r->ise_opt);
            d1 += delta;
            d2 += delta * delta;
            ucat_hits += r->ucat == r->true_ucat;
            lmax_hits += r->local_max == r->true_local_max;
        }
        row.runs = h_diff.size();
        if (row.runs > 0) {
            const double k = static_cast<double>(row.runs);
            for (double v : h_diff) row.c1 += v;
            row.c1 /= k;
            for (double v : ise_hat) row.c2 += v;
            row.c2 /= k;
            if (row.runs > 1) {
                double ss = 0.0;
                for (double v : ise_hat) ss += (v - row.c2) * (v - row.c2);
                row.c3 = std::sqrt(ss / (k - 1.0));
            }
            row.c4 = d2 / k;
            row.c5 = d1 / k;
            row.ucat_correct = static_cast<double>(ucat_hits) / k;
            row.local_max_correct = static_cast<double>(lmax_hits) / k;
        } else {
            row.c1 = row.c2 = row.c3 = row.c4 = row.c5 = std::numeric_limits<double>::quiet_NaN();
            row.ucat_correct = row.local_max_correct = std::numeric_limits<double>::quiet_NaN();
        }
        row.h_diff = quartiles(h_diff);
        row.ise_hat = quartiles(ise_hat);
        row.c45 = quartiles(c45);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string_view to_string(Measure m) noexcept {
    switch (m) {
        case Measure::HDiff: return "h_diff";
        case Measure::IseHat: return "ise_hat";
        case Measure::C45: return "c45";
        case Measure::Ucat: return "ucat";
        case Measure::LocalMax: return "local_max";
    }
    return "c45";
}

Measure parse_measure(std::string_view name) {
    for (Measure m : all_measures()) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown measure '" + std::string(name) + "'");
}

std::vector<Measure> all_measures() {
    return {Measure::HDiff, Measure::IseHat, Measure::C45, Measure::Ucat, Measure::LocalMax};
}

HistogramMatrix histogram_export(std::span<const RunRecord> records, const HistogramRequest& req) {
    if (req.families.empty()) throw Error(ErrorCode::InvalidConfig, "histogram needs at least one family");
    if (req.families.size() > 1 && !req.n) {
        throw Error(ErrorCode::InvalidConfig, "histogram over several families needs a fixed sample size");
    }
    if (req.bins == 0) throw Error(ErrorCode::InvalidConfig, "histogram needs at least one bin");
    const bool by_n = req.families.size() == 1;

    std::vector<RunRecord> chosen;
    for (const auto& r : records) {
        if (!r.ok || r.kernel != req.kernel) continue;
        if (r.selector != req.selector_a && r.selector != req.selector_b) continue;
        if (std::find(req.families.begin(), req.families.end(), r.family) == req.families.end()) continue;
        if (!by_n && r.n != *req.n) continue;
        chosen.push_back(r);
    }
    if (chosen.empty()) throw Error(ErrorCode::EmptyRecords, "no records match the histogram request");

    HistogramMatrix out;
    out.measure = req.measure;
    out.selector_a = req.selector_a;
    out.selector_b = req.selector_b;

    std::vector<std::size_t> sizes;
    if (by_n) {
        for (const auto& r : chosen) sizes.push_back(r.n);
        std::sort(sizes.begin(), sizes.end());
        sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
        for (auto n : sizes) out.columns.push_back(std::to_string(n));
    } else {
        out.columns = req.families;
    }
    auto column_of = [&](const RunRecord& r) -> std::size_t {
        if (by_n) return static_cast<std::size_t>(std::lower_bound(sizes.begin(), sizes.end(), r.n) - sizes.begin());
        return static_cast<std::size_t>(std::find(req.families.begin(), req.families.end(), r.family) -
                                        req.families.begin());
    };

    double lo = 0.0;
    double hi = 0.0;
    std::size_t bins = req.bins;
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    for_each_record_value(chosen, req.measure, [&](const RunRecord&, double v) {
        if (!std::isfinite(v)) return;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    });
    switch (req.measure) {
        case Measure::C45:
            lo = kC45Lo;
            hi = kC45Hi;
            break;
        case Measure::HDiff:
            lo = std::isfinite(vmin) ? vmin : 0.0;
            hi = std::isfinite(vmax) ? vmax : 0.0;
            if (lo == hi) {
                lo -= 0.5;
                hi += 0.5;
            }
            break;
        case Measure::IseHat:
            lo = 0.0;
            hi = std::isfinite(vmax) && vmax > 0.0 ? vmax : 1.0;
            break;
        case Measure::Ucat:
        case Measure::LocalMax: {
            // Unit bins centered on the integers 1..max(20, observed).
            const auto top = std::max<std::size_t>(20, std::isfinite(vmax) ? static_cast<std::size_t>(vmax) : 0);
            lo = 0.5;
            hi = static_cast<double>(top) + 0.5;
            bins = top;
            break;
        }
    }
    out.edges = linspace(lo, hi, bins + 1);
    const std::vector<double> zero_row(out.columns.size(), 0.0);
    out.counts_a.assign(bins, zero_row);
    out.counts_b.assign(bins, zero_row);

    const double width = hi - lo;
    for_each_record_value(chosen, req.measure, [&](const RunRecord& r, double v) {
        if (!std::isfinite(v) || v < lo || v > hi) return;
        auto bin = static_cast<std::size_t>(std::floor((v - lo) / width * static_cast<double>(bins)));
        bin = std::min(bin, bins - 1);
        auto& target = r.selector == req.selector_a ? out.counts_a : out.counts_b;
        target[bin][column_of(r)] += 1.0;
    });

    out.normalized_a = out.counts_a;
    out.normalized_b = out.counts_b;
    normalize_columns(out.normalized_a);
    normalize_columns(out.normalized_b);
    affine_unit(out.normalized_a);
    affine_unit(out.normalized_b);
    return out;
}

}  // namespace tde
