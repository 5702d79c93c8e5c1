#include "tde/error.hpp"
#include "tde/harness.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace tde {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return ec == std::errc() ? std::string(buf.data(), ptr) : std::string("nan");
}

std::string fmt_short(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.3g", v);
    return buf.data();
}

template <class T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::ParseError, std::string("record is missing '") + key + "'");
    return j.at(key).get<T>();
}

}  // namespace

std::string to_ndjson_line(const RunRecord& r) {
    Json j;
    j["schema_version"] = kRecordSchemaVersion;
    j["family"] = r.family;
    j["family_index"] = r.family_index;
    j["kernel"] = to_string(r.kernel);
    j["selector"] = to_string(r.selector);
    j["n"] = r.n;
    j["replicate"] = r.replicate;
    j["seed"] = r.seed;
    j["ok"] = r.ok;
    j["error"] = r.error;
    j["h_hat"] = r.h_hat;
    j["h_opt"] = r.h_opt;
    j["h_diff"] = r.h_diff;
    j["ise_hat"] = r.ise_hat;
    j["ise_opt"] = r.ise_opt;
    if (std::isfinite(r.c45)) {
        j["c45"] = r.c45;
    } else {
        j["c45"] = nullptr;
    }
    j["ucat"] = r.ucat;
    j["local_max"] = r.local_max;
    j["true_ucat"] = r.true_ucat;
    j["true_local_max"] = r.true_local_max;
    j["kernel_evals"] = r.kernel_evals;
    return j.dump();
}

RunRecord record_from_json_line(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed record: ") + e.what());
    }
    try {
        if (field<int>(j, "schema_version") != kRecordSchemaVersion) {
            throw Error(ErrorCode::ParseError, "unsupported record schema version");
        }
        RunRecord r;
        r.family = field<std::string>(j, "family");
        r.family_index = field<std::size_t>(j, "family_index");
        r.kernel = parse_kernel(field<std::string>(j, "kernel"));
        r.selector = parse_selector(field<std::string>(j, "selector"));
        r.n = field<std::size_t>(j, "n");
        r.replicate = field<std::size_t>(j, "replicate");
        r.seed = field<std::uint64_t>(j, "seed");
        r.ok = field<bool>(j, "ok");
        r.error = field<std::string>(j, "error");
        r.h_hat = field<double>(j, "h_hat");
        r.h_opt = field<double>(j, "h_opt");
        r.h_diff = field<double>(j, "h_diff");
        r.ise_hat = field<double>(j, "ise_hat");
        r.ise_opt = field<double>(j, "ise_opt");
        r.c45 = j.contains("c45") && j["c45"].is_null() ? -std::numeric_limits<double>::infinity()
                                                        : field<double>(j, "c45");
        r.ucat = field<std::size_t>(j, "ucat");
        r.local_max = field<std::size_t>(j, "local_max");
        r.true_ucat = field<std::size_t>(j, "true_ucat");
        r.true_local_max = field<std::size_t>(j, "true_local_max");
        r.kernel_evals = field<std::uint64_t>(j, "kernel_evals");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bad record field: ") + e.what());
    }
}

void write_records(std::ostream& os, std::span<const RunRecord> records) {
    for (const auto& r : records) os << to_ndjson_line(r) << '\n';
}

std::vector<RunRecord> read_records(std::istream& is) {
    std::vector<RunRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(record_from_json_line(line));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
    os << "schema_version,family,kernel,selector,n,runs,failures,c1,c2,c3,c4,c5,"
          "h_diff_q25,h_diff_q50,h_diff_q75,ise_hat_q25,ise_hat_q50,ise_hat_q75,"
          "c45_q25,c45_q50,c45_q75,ucat_correct,local_max_correct\n";
    for (const auto& r : rows) {
        os << kRecordSchemaVersion << ',' << r.family << ',' << to_string(r.kernel) << ',' << to_string(r.selector)
           << ',' << r.n << ',' << r.runs << ',' << r.failures;
        for (double v : {r.c1, r.c2, r.c3, r.c4, r.c5, r.h_diff.q25, r.h_diff.q50, r.h_diff.q75, r.ise_hat.q25,
                         r.ise_hat.q50, r.ise_hat.q75, r.c45.q25, r.c45.q50, r.c45.q75, r.ucat_correct,
                         r.local_max_correct}) {
            os << ',' << fmt_double(v);
        }
        os << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const HistogramMatrix& h) {
    os << "bin_lo,bin_hi";
    for (const auto& c : h.columns) os << ',' << to_string(h.selector_a) << ':' << c;
    for (const auto& c : h.columns) os << ',' << to_string(h.selector_b) << ':' << c;
    os << '\n';
    for (std::size_t b = 0; b < h.bins(); ++b) {
        os << fmt_double(h.edges[b]) << ',' << fmt_double(h.edges[b + 1]);
        for (double v : h.normalized_a[b]) os << ',' << fmt_double(v);
        for (double v : h.normalized_b[b]) os << ',' << fmt_double(v);
        os << '\n';
    }
}

// Overlaid translucent strips: one vertical strip per column, one cell per
// bin, first selector in blue and second in red, opacity = normalized value.
void write_histogram_svg(std::ostream& os, const HistogramMatrix& h, std::string_view title) {
    constexpr double kLeft = 70.0;
    constexpr double kTop = 40.0;
    constexpr double kPlotH = 300.0;
    constexpr double kBottom = 50.0;
    const double col_w = 40.0;
    const double plot_w = col_w * static_cast<double>(h.columns.size());
    const double width = kLeft + plot_w + 20.0;
    const double height = kTop + kPlotH + kBottom;
    const double cell_h = h.bins() > 0 ? kPlotH / static_cast<double>(h.bins()) : kPlotH;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">";
    for (char c : title) {
        if (c == '<') os << "&lt;";
        else if (c == '>') os << "&gt;";
        else if (c == '&') os << "&amp;";
        else os << c;
    }
    os << "</text>\n";

    auto strip = [&](const std::vector<std::vector<double>>& m, const char* color) {
        for (std::size_t b = 0; b < h.bins(); ++b) {
            for (std::size_t c = 0; c < h.columns.size(); ++c) {
                const double alpha = m[b][c];
                if (alpha <= 0.0) continue;
                const double y = kTop + kPlotH - static_cast<double>(b + 1) * cell_h;
                os << "<rect x=\"" << kLeft + static_cast<double>(c) * col_w << "\" y=\"" << y << "\" width=\""
                   << col_w << "\" height=\"" << cell_h << "\" fill=\"" << color << "\" fill-opacity=\""
                   << fmt_short(alpha) << "\"/>\n";
            }
        }
    };
    strip(h.normalized_a, "blue");
    strip(h.normalized_b, "red");

    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << kPlotH
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t c = 0; c < h.columns.size(); ++c) {
        os << "<text x=\"" << kLeft + (static_cast<double>(c) + 0.5) * col_w << "\" y=\"" << kTop + kPlotH + 16
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << h.columns[c]
           << "</text>\n";
    }
    if (!h.edges.empty()) {
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + kPlotH
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt_short(h.edges.front())
           << "</text>\n";
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt_short(h.edges.back())
           << "</text>\n";
    }
    os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << height - 12
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << to_string(h.measure) << " ("
       << to_string(h.selector_a) << " blue, " << to_string(h.selector_b) << " red)</text>\n";
    os << "</svg>\n";
}

}  // namespace tde
