#include "cli.hpp"

#include "tde/bandwidth.hpp"
#include "tde/densities.hpp"
#include "tde/error.hpp"
#include "tde/harness.hpp"
#include "tde/unimodal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace tde::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return ec == std::errc() ? std::string(buf.data(), ptr) : "nan";
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(std::string_view tok) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    if (tok.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ',' && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        out.push_back(line.substr(i, j - i));
        i = j;
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i < line.size() && line[i] == ',') ++i;
    }
    return out;
}

// Reads the first `columns` numeric fields of every data line. Blank lines and
// '#' comments are skipped; a non-numeric first data line is taken as a header.
std::vector<std::vector<double>> read_table(const std::string& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first_data = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = split_fields(body);
        std::vector<double> row;
        bool ok = fields.size() >= columns;
        for (std::size_t c = 0; ok && c < columns; ++c) {
            const auto v = parse_number(fields[c]);
            if (!v) {
                ok = false;
                break;
            }
            row.push_back(*v);
        }
        if (!ok) {
            if (first_data && !fields.empty() && !parse_number(fields[0])) {
                first_data = false;
                continue;
            }
            throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected " +
                                                   std::to_string(columns) + " finite number(s), got '" +
                                                   std::string(body) + "'");
        }
        first_data = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "'" + path + "' contains no data");
    return rows;
}

struct Output {
    std::ofstream file;
    std::ostream* stream = nullptr;

    Output(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            stream = &fallback;
            return;
        }
        file.open(path, std::ios::binary);
        if (!file) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
        stream = &file;
    }
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::size_t harness_threads() {
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TDE_THREADS")) {
        std::size_t cap = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cap);
        if (ec != std::errc() || ptr != s.data() + s.size() || cap == 0) {
            throw Error(ErrorCode::InvalidConfig, "TDE_THREADS must be a positive integer");
        }
        threads = cap;
    }
    return threads;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string input;
    std::string output;
    std::string kernel = "gaussian";
    std::string selector = "tde";
    std::string format = "csv";
    std::optional<std::size_t> nh;
};

struct EstimateArtifact {
    std::string selector;
    std::string kernel;
    std::size_t n = 0;
    std::size_t n_h = 0;
    double h_hat = 0.0;
    std::size_t m_hat = 1;
    std::vector<std::size_t> u_profile;
    DensityGrid estimate;
    ConfidenceBands bands;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    const KernelKind kind = parse_kernel(a.kernel);
    const Selector selector = parse_selector(a.selector);
    if (a.format != "csv" && a.format != "ndjson") {
        throw Error(ErrorCode::InvalidConfig, "estimate supports --format csv or ndjson");
    }
    if (a.nh && *a.nh == 0) throw Error(ErrorCode::InvalidConfig, "--nh must be positive");

    std::vector<double> values;
    for (const auto& row : read_table(a.input, 1)) values.push_back(row[0]);
    const Sample sample(std::move(values));

    SelectorOptions opts;
    opts.bandwidth_count = a.nh;

    EstimateArtifact art;
    art.selector = a.selector;
    art.kernel = a.kernel;
    art.n = sample.size();
    if (sample.range() == 0.0) {
        err << "warning: sample range is zero; returning a point mass at the mean with h = 0\n";
        const auto res = tde_select(sample, kind, opts);
        art.n_h = 0;
        art.h_hat = 0.0;
        art.m_hat = 1;
        art.u_profile = res.profile.u;
        art.estimate = res.estimate;
        art.bands = res.bands;
    } else if (selector == Selector::Cv) {
        const auto res = cv_select(sample, kind, opts);
        art.n_h = res.grid.size();
        art.h_hat = res.h;
        art.m_hat = ucat(res.estimate.f);
        art.estimate = res.estimate;
        art.bands = res.bands;
    } else {
        const auto res = selector == Selector::Tde ? tde_select(sample, kind, opts)
                                                   : tde_select_stable_modes(sample, kind, opts);
        art.n_h = res.profile.grid.size();
        art.h_hat = res.profile.h_hat;
        art.m_hat = res.profile.m_hat;
        art.u_profile = res.profile.u;
        art.estimate = res.estimate;
        art.bands = res.bands;
    }

    Output dst(a.output, out);
    std::ostream& os = *dst.stream;
    if (a.format == "ndjson") {
        nlohmann::ordered_json j;
        j["selector"] = art.selector;
        j["kernel"] = art.kernel;
        j["n"] = art.n;
        j["n_h"] = art.n_h;
        j["h_hat"] = art.h_hat;
        j["m_hat"] = art.m_hat;
        j["u_profile"] = art.u_profile;
        j["x"] = art.estimate.x;
        j["f"] = art.estimate.f;
        j["levels"] = art.bands.levels;
        j["lower"] = art.bands.lower;
        j["upper"] = art.bands.upper;
        os << j.dump() << '\n';
        return kSuccess;
    }

    os << "# selector: " << art.selector << '\n';
    os << "# kernel: " << art.kernel << '\n';
    os << "# n: " << art.n << '\n';
    os << "# n_h: " << art.n_h << '\n';
    os << "# h_hat: " << fmt(art.h_hat) << '\n';
    os << "# m_hat: " << art.m_hat << '\n';
    os << "# u_profile:";
    for (auto u : art.u_profile) os << ' ' << u;
    os << '\n';
    os << "x,f";
    for (double lvl : art.bands.levels) os << ",lower_" << fmt(lvl) << ",upper_" << fmt(lvl);
    os << '\n';
    for (std::size_t i = 0; i < art.estimate.size(); ++i) {
        os << fmt(art.estimate.x[i]) << ',' << fmt(art.estimate.f[i]);
        for (std::size_t l = 0; l < art.bands.levels.size(); ++l) {
            os << ',' << fmt(art.bands.lower[l][i]) << ',' << fmt(art.bands.upper[l][i]);
        }
        os << '\n';
    }
    return kSuccess;
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeArgs {
    std::string input;
    std::string output;
    bool verify = false;
};

int cmd_decompose(const DecomposeArgs& a, std::ostream& out, std::ostream& err) {
    const auto rows = read_table(a.input, 2);
    std::vector<double> x;
    std::vector<double> f;
    for (const auto& r : rows) {
        x.push_back(r[0]);
        f.push_back(r[1]);
    }
    const auto dec = sweep_decompose(f);

    if (a.output.empty()) {
        out << "# ucat: " << dec.size() << '\n';
    } else {
        out << "ucat: " << dec.size() << '\n';
    }
    Output dst(a.output, out);
    std::ostream& os = *dst.stream;
    os << "x,f";
    for (std::size_t k = 0; k < dec.size(); ++k) os << ",u" << k + 1;
    os << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) {
        os << fmt(x[i]) << ',' << fmt(f[i]);
        for (const auto& c : dec.components) os << ',' << fmt(c[i]);
        os << '\n';
    }

    if (a.verify) {
        const double scale = *std::max_element(f.begin(), f.end());
        double worst = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            double s = 0.0;
            for (const auto& c : dec.components) s += c[i];
            worst = std::max(worst, std::abs(s - f[i]));
        }
        const double rel = worst / scale;
        bool unimodal = true;
        for (const auto& c : dec.components) unimodal = unimodal && is_unimodal(c);
        if (rel >= 1e-9 || !unimodal) {
            err << "verify: FAILED (relative reconstruction error " << fmt(rel)
                << (unimodal ? "" : ", non-unimodal component") << ")\n";
            return kDataError;
        }
        err << "verify: ok (relative reconstruction error " << fmt(rel) << ")\n";
    }
    return kSuccess;
}

// ---------------------------------------------------------------------------
// bench / report

struct OutputArgs {
    std::string out_dir = "bench_out";
    std::string format = "csv";
    std::vector<std::string> measures;
    std::size_t bins = 50;
};

std::string file_safe(std::string s) {
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write '" + path.string() + "'");
    f << content;
}

// Writes summary.csv plus one histogram CSV (and optionally SVG) per measure,
// kernel, and column grouping present in the records.
void write_reports(std::span<const RunRecord> records, const OutputArgs& a) {
    if (records.empty()) throw Error(ErrorCode::EmptyRecords, "no records to report");
    const fs::path dir(a.out_dir);
    fs::create_directories(dir / "histograms");
    {
        std::ostringstream ss;
        write_summary_csv(ss, summarize(records));
        write_file(dir / "summary.csv", ss.str());
    }

    std::vector<Measure> measures;
    for (const auto& m : a.measures) measures.push_back(parse_measure(m));
    if (measures.empty()) measures = all_measures();

    std::vector<Selector> selectors;
    std::vector<KernelKind> kernels;
    std::vector<std::pair<std::size_t, std::string>> families;
    std::vector<std::size_t> sizes;
    for (const auto& r : records) {
        if (std::find(selectors.begin(), selectors.end(), r.selector) == selectors.end()) {
            selectors.push_back(r.selector);
        }
        if (std::find(kernels.begin(), kernels.end(), r.kernel) == kernels.end()) kernels.push_back(r.kernel);
        const std::pair<std::size_t, std::string> fam{r.family_index, r.family};
        if (std::find(families.begin(), families.end(), fam) == families.end()) families.push_back(fam);
        if (std::find(sizes.begin(), sizes.end(), r.n) == sizes.end()) sizes.push_back(r.n);
    }
    std::sort(selectors.begin(), selectors.end());
    std::sort(families.begin(), families.end());
    std::sort(sizes.begin(), sizes.end());

    // fkm families grouped by their k label, for the per-k panels over m.
    std::map<std::string, std::vector<std::string>> by_k;
    for (const auto& [idx, id] : families) {
        if (id.rfind("fkm:", 0) == 0) by_k[id.substr(4, id.find(':', 4) - 4)].push_back(id);
    }

    auto emit = [&](const HistogramRequest& req, const std::string& group) {
        HistogramMatrix h;
        try {
            h = histogram_export(records, req);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::EmptyRecords) return;
            throw;
        }
        const std::string stem =
            std::string(to_string(req.measure)) + "__" + file_safe(group) + "__" + std::string(to_string(req.kernel));
        std::ostringstream csv;
        write_histogram_csv(csv, h);
        write_file(dir / "histograms" / (stem + ".csv"), csv.str());
        if (a.format == "svg") {
            std::ostringstream svg;
            write_histogram_svg(svg, h, stem);
            write_file(dir / "histograms" / (stem + ".svg"), svg.str());
        }
    };

    for (Measure m : measures) {
        for (KernelKind k : kernels) {
            HistogramRequest req;
            req.measure = m;
            req.kernel = k;
            req.bins = a.bins;
            req.selector_a = selectors.front();
            req.selector_b = selectors.size() > 1 ? selectors[1] : selectors.front();
            for (const auto& [idx, id] : families) {
                req.families = {id};
                req.n.reset();
                emit(req, id);
            }
            for (const auto& [k_label, ids] : by_k) {
                if (ids.size() < 2) continue;
                for (auto n : sizes) {
                    req.families = ids;
                    req.n = n;
                    emit(req, "fkm-k" + k_label + "-n" + std::to_string(n));
                }
            }
        }
    }
}

struct BenchArgs {
    std::string families;
    std::string sizes = "25,50,100,200,500";
    std::size_t replicates = 250;
    std::uint64_t seed = 0;
    std::string kernel = "both";
    std::string selectors = "tde,cv";
    std::optional<std::size_t> nh;
    OutputArgs output;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    cfg.replicates = a.replicates;
    cfg.seed = a.seed;
    cfg.bandwidth_count = a.nh;
    cfg.threads = harness_threads();
    if (!a.families.empty()) {
        cfg.families.clear();
        for (const auto& id : split_list(a.families)) cfg.families.push_back(parse_family(id));
    }
    cfg.sample_sizes.clear();
    for (const auto& s : split_list(a.sizes)) {
        const auto v = parse_number(s);
        if (!v || *v < 0 || *v != std::floor(*v)) {
            throw Error(ErrorCode::InvalidConfig, "--n expects a comma-separated list of integers, got '" + s + "'");
        }
        cfg.sample_sizes.push_back(static_cast<std::size_t>(*v));
    }
    if (a.kernel == "both") {
        cfg.kernels = {KernelKind::Gaussian, KernelKind::Epanechnikov};
    } else {
        cfg.kernels = {parse_kernel(a.kernel)};
    }
    cfg.selectors.clear();
    for (const auto& s : split_list(a.selectors)) cfg.selectors.push_back(parse_selector(s));
    if (a.output.format != "csv" && a.output.format != "ndjson" && a.output.format != "svg") {
        throw Error(ErrorCode::InvalidConfig, "--format must be csv, ndjson, or svg");
    }
    validate(cfg);

    const auto records = run_experiment(cfg);
    fs::create_directories(a.output.out_dir);
    {
        std::ostringstream ss;
        write_records(ss, records);
        write_file(fs::path(a.output.out_dir) / "records.ndjson", ss.str());
    }
    write_reports(records, a.output);

    const auto failed = std::count_if(records.begin(), records.end(), [](const RunRecord& r) { return !r.ok; });
    out << "records: " << records.size() << " (" << failed << " failed) -> " << a.output.out_dir << '\n';
    if (failed > 0) {
        err << "warning: " << failed << " record(s) failed; see the 'error' field in records.ndjson\n";
        return kPartialFailure;
    }
    return kSuccess;
}

struct ReportArgs {
    std::string input;
    OutputArgs output;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::ifstream in(a.input);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + a.input + "'");
    const auto records = read_records(in);
    write_reports(records, a.output);
    out << "report: " << records.size() << " records -> " << a.output.out_dir << '\n';
    return kSuccess;
}

void add_output_options(CLI::App* cmd, OutputArgs& o) {
    cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--format", o.format, "csv | ndjson | svg (svg also writes heat-strip plots)")
        ->check(CLI::IsMember({"csv", "ndjson", "svg"}))
        ->capture_default_str();
    cmd->add_option("--measure", o.measures, "Histogram measures (h_diff, ise_hat, c45, ucat, local_max)")
        ->delimiter(',');
    cmd->add_option("--bins", o.bins, "Bins for continuous measures")->check(CLI::PositiveNumber)->capture_default_str();
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidSpec:
            return kUsageError;
        default:
            return kDataError;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Topological density estimation: bandwidth selection from unimodal-category persistence"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate a density from a one-column sample file");
    estimate->add_option("--input", est.input, "Sample file, one number per line")->required();
    estimate->add_option("--out", est.output, "Output file (default: standard output)");
    estimate->add_option("--kernel", est.kernel, "gaussian | epanechnikov")
        ->check(CLI::IsMember({"gaussian", "epanechnikov"}))
        ->capture_default_str();
    estimate->add_option("--selector", est.selector, "tde | tde-stable | cv")
        ->check(CLI::IsMember({"tde", "tde-stable", "cv"}))
        ->capture_default_str();
    estimate->add_option("--nh", est.nh, "Number of candidate bandwidths (default min(n, 100))");
    estimate->add_option("--format", est.format, "csv | ndjson")
        ->check(CLI::IsMember({"csv", "ndjson"}))
        ->capture_default_str();

    DecomposeArgs dec;
    auto* decompose = app.add_subcommand("decompose", "Unimodal decomposition of a two-column (x, f) file");
    decompose->add_option("--input", dec.input, "Curve file with x and f columns")->required();
    decompose->add_option("--out", dec.output, "Output CSV (default: standard output)");
    decompose->add_flag("--verify", dec.verify, "Check that components are unimodal and sum to f");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Monte-Carlo comparison of bandwidth selectors");
    bench->add_option("--families", bench_args.families, "Comma list of f1..f6, fkm:<k>:<m> (default: all 36)");
    bench->add_option("--n", bench_args.sizes, "Comma list of sample sizes")->capture_default_str();
    bench->add_option("--N", bench_args.replicates, "Replicates per (family, n)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bench->add_option("--seed", bench_args.seed, "Master seed")->capture_default_str();
    bench->add_option("--kernel", bench_args.kernel, "gaussian | epanechnikov | both")
        ->check(CLI::IsMember({"gaussian", "epanechnikov", "both"}))
        ->capture_default_str();
    bench->add_option("--selector", bench_args.selectors, "Comma list of tde, tde-stable, cv")->capture_default_str();
    bench->add_option("--nh", bench_args.nh, "Number of candidate bandwidths for the selectors");
    add_output_options(bench, bench_args.output);

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Summaries and histogram exports from a records file");
    report->add_option("--input", report_args.input, "records.ndjson written by bench")->required();
    add_output_options(report, report_args.output);

    std::vector<std::string> argv_store{"tde"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        err << "run with --help for usage\n";
        return kUsageError;
    }

    try {
        if (*estimate) return cmd_estimate(est, out, err);
        if (*decompose) return cmd_decompose(dec, out, err);
        if (*bench) return cmd_bench(bench_args, out, err);
        if (*report) return cmd_report(report_args, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace tde::cli
