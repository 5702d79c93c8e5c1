#include "cli.hpp"
#include "tde/densities.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = tde::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "tde_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_sample(const std::string& name, std::size_t n) {
    tde::Rng rng(17);
    const auto xs = tde::draw(tde::parse_family("f5").spec, n, rng);
    const auto path = scratch(name);
    std::ofstream f(path);
    f << "# two bumps\n\n";
    for (double x : xs) f << x << '\n';
    return path;
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == tde::cli::kUsageError);
    CHECK(run({"frobnicate"}).code == tde::cli::kUsageError);
    CHECK(run({"estimate"}).code == tde::cli::kUsageError);
    const auto sample = write_sample("usage.txt", 50);
    CHECK(run({"estimate", "--input", sample.string(), "--kernel", "box"}).code == tde::cli::kUsageError);
    CHECK(run({"--help"}).code == tde::cli::kSuccess);
}

TEST_CASE("estimate writes metadata and one row per grid point") {
    const auto sample = write_sample("est.txt", 200);
    const auto r = run({"estimate", "--input", sample.string(), "--kernel", "gaussian"});
    REQUIRE(r.code == tde::cli::kSuccess);
    CHECK(r.out.find("# selector: tde\n") != std::string::npos);
    CHECK(r.out.find("# n_h: 100\n") != std::string::npos);
    const auto pos = r.out.find("# h_hat: ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(r.out.substr(pos + 9)) > 0.0);
    const auto rows = data_lines(r.out);
    REQUIRE(rows.size() == 101);
    CHECK(rows[0] == "x,f,lower_0.1,upper_0.1,lower_0.01,upper_0.01,lower_0.001,upper_0.001");
}

TEST_CASE("estimate with cv keeps the schema") {
    const auto sample = write_sample("est_cv.txt", 200);
    const auto a = run({"estimate", "--input", sample.string()});
    const auto b = run({"estimate", "--input", sample.string(), "--kernel", "epanechnikov", "--selector", "cv"});
    REQUIRE(b.code == tde::cli::kSuccess);
    CHECK(b.out.find("# selector: cv\n") != std::string::npos);
    CHECK(data_lines(a.out)[0] == data_lines(b.out)[0]);
    CHECK(data_lines(a.out).size() == data_lines(b.out).size());

    const auto j = run({"estimate", "--input", sample.string(), "--format", "ndjson", "--nh", "30"});
    REQUIRE(j.code == tde::cli::kSuccess);
    CHECK(j.out.find("\"n_h\":30") != std::string::npos);
}

TEST_CASE("estimate on a repeated value returns a point mass") {
    const auto path = scratch("same.txt");
    std::ofstream(path) << "4.5\n4.5\n+4.5\n";
    const auto r = run({"estimate", "--input", path.string()});
    CHECK(r.code == tde::cli::kSuccess);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(r.out.find("# h_hat: 0\n") != std::string::npos);
    CHECK(r.out.find("# m_hat: 1\n") != std::string::npos);
}

TEST_CASE("estimate input errors") {
    const auto bad = scratch("bad.txt");
    std::ofstream(bad) << "1.0\n2.0\nnan\n";
    const auto r = run({"estimate", "--input", bad.string()});
    CHECK(r.code == tde::cli::kDataError);
    CHECK(r.err.find(":3:") != std::string::npos);

    const auto empty = scratch("empty.txt");
    std::ofstream(empty) << "# nothing\n";
    CHECK(run({"estimate", "--input", empty.string()}).code == tde::cli::kDataError);
    CHECK(run({"estimate", "--input", scratch("missing.txt").string()}).code == tde::cli::kDataError);

    const auto sci = scratch("sci.txt");
    std::ofstream(sci) << "1e-1\n2.5E0\n-3\n";
    CHECK(run({"estimate", "--input", sci.string()}).code == tde::cli::kSuccess);
}

TEST_CASE("decompose round trips estimate output") {
    const auto sample = write_sample("dec.txt", 300);
    const auto est = scratch("dec_est.csv");
    REQUIRE(run({"estimate", "--input", sample.string(), "--out", est.string()}).code == tde::cli::kSuccess);
    const auto out = scratch("dec_out.csv");
    const auto r = run({"decompose", "--input", est.string(), "--out", out.string(), "--verify"});
    REQUIRE(r.code == tde::cli::kSuccess);
    CHECK(r.out.rfind("ucat: ", 0) == 0);
    CHECK(r.err.find("verify: ok") != std::string::npos);

    const auto rows = data_lines(slurp(out));
    REQUIRE(rows.size() > 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::istringstream ls(rows[i]);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
        double s = 0.0;
        for (std::size_t k = 2; k < v.size(); ++k) s += v[k];
        CHECK(s == doctest::Approx(v[1]).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("decompose of a three-category grid family") {
    const auto grid = tde::default_truth_grid();
    const auto f = tde::pdf_on_grid(tde::GridFamily{1.0, 5}, grid);
    const auto path = scratch("f15.csv");
    {
        std::ofstream o(path);
        o.precision(17);
        for (std::size_t i = 0; i < grid.size(); ++i) o << f.x[i] << ',' << f.f[i] << '\n';
    }
    const auto r = run({"decompose", "--input", path.string()});
    REQUIRE(r.code == tde::cli::kSuccess);
    CHECK(r.out.rfind("# ucat: 3\n", 0) == 0);
    CHECK(r.out.find("x,f,u1,u2,u3\n") != std::string::npos);

    const auto uni = scratch("uni.csv");
    std::ofstream(uni) << "x,f\n0,0\n1,1\n2,3\n3,1\n";
    const auto u = run({"decompose", "--input", uni.string()});
    CHECK(u.out.find("x,f,u1\n") != std::string::npos);
    CHECK(u.out.find("2,3,3\n") != std::string::npos);

    const auto neg = scratch("neg.csv");
    std::ofstream(neg) << "0,1\n1,-1\n";
    CHECK(run({"decompose", "--input", neg.string()}).code == tde::cli::kDataError);
}

TEST_CASE("bench is deterministic and report rebuilds its outputs") {
    const auto a = scratch("bench_a");
    const auto b = scratch("bench_b");
    fs::remove_all(a);
    fs::remove_all(b);
    const std::vector<std::string> common{"bench", "--families", "f4", "--n", "25", "--N", "2", "--seed", "7"};
    auto args_a = common;
    args_a.insert(args_a.end(), {"--out", a.string()});
    auto args_b = common;
    args_b.insert(args_b.end(), {"--out", b.string()});
    REQUIRE(run(args_a).code == tde::cli::kSuccess);
    REQUIRE(run(args_b).code == tde::cli::kSuccess);
    CHECK(slurp(a / "records.ndjson") == slurp(b / "records.ndjson"));
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
    CHECK(fs::exists(a / "histograms" / "c45__f4__gaussian.csv"));
    CHECK(fs::exists(a / "histograms" / "ucat__f4__epanechnikov.csv"));

    const auto rep = scratch("bench_report");
    fs::remove_all(rep);
    REQUIRE(run({"report", "--input", (a / "records.ndjson").string(), "--out", rep.string(), "--format", "svg"})
                .code == tde::cli::kSuccess);
    CHECK(slurp(rep / "summary.csv") == slurp(a / "summary.csv"));
    CHECK(slurp(rep / "histograms" / "h_diff__f4__gaussian.csv") ==
          slurp(a / "histograms" / "h_diff__f4__gaussian.csv"));
    CHECK(fs::exists(rep / "histograms" / "h_diff__f4__gaussian.svg"));
}

TEST_CASE("bench summary carries the ucat column") {
    const auto dir = scratch("bench_fkm");
    fs::remove_all(dir);
    const auto r = run({"bench", "--families", "fkm:3:6", "--n", "50", "--N", "2", "--kernel", "gaussian", "--out",
                        dir.string()});
    REQUIRE(r.code == tde::cli::kSuccess);
    const auto summary = slurp(dir / "summary.csv");
    CHECK(summary.find("ucat_correct") != std::string::npos);
    CHECK(summary.find("fkm:3:6,gaussian,tde,50,2,0,") != std::string::npos);
    CHECK(fs::exists(dir / "histograms" / "ucat__fkm-3-6__gaussian.csv"));
}

TEST_CASE("bench rejects bad configuration") {
    const auto dir = scratch("bench_bad");
    CHECK(run({"bench", "--families", "f9", "--out", dir.string()}).code == tde::cli::kUsageError);
    CHECK(run({"bench", "--families", "f4", "--n", "1", "--out", dir.string()}).code == tde::cli::kUsageError);
    CHECK(run({"bench", "--families", "f4", "--n", "x", "--out", dir.string()}).code == tde::cli::kUsageError);
    CHECK(run({"report", "--input", scratch("missing.ndjson").string()}).code == tde::cli::kDataError);
}
