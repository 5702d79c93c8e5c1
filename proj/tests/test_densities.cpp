#include "tde/densities.hpp"
#include "tde/error.hpp"
#include "tde/unimodal.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>

using namespace tde;

namespace {

const DensitySpec& family(const std::string& id) {
    static const auto suite = evaluation_suite();
    for (const auto& e : suite) {
        if (e.id == id) return e.spec;
    }
    throw std::runtime_error("unknown family " + id);
}

double integrate(const DensitySpec& spec, double lo, double hi, std::size_t points) {
    const auto g = pdf_on_grid(spec, linspace(lo, hi, points));
    double acc = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) acc += 0.5 * (g.f[i] + g.f[i - 1]) * (g.x[i] - g.x[i - 1]);
    return acc;
}

// Kolmogorov-Smirnov distance between a sample and the cdf obtained by
// trapezoid integration of the pdf on a fine grid.
double ks_distance(const DensitySpec& spec, std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const auto g = pdf_on_grid(spec, linspace(-4.0, 8.0, 240001));
    std::vector<double> cdf(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) {
        cdf[i] = cdf[i - 1] + 0.5 * (g.f[i] + g.f[i - 1]) * (g.x[i] - g.x[i - 1]);
    }
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (k + 1 < g.size() && g.x[k + 1] <= xs[i]) ++k;
        double c = cdf[k];
        if (k + 1 < g.size()) {
            const double t = (xs[i] - g.x[k]) / (g.x[k + 1] - g.x[k]);
            c += t * (cdf[k + 1] - cdf[k]);
        }
        d = std::max({d, std::abs(c - static_cast<double>(i) / n), std::abs(c - static_cast<double>(i + 1) / n)});
    }
    return d;
}

}  // namespace

TEST_CASE("suite composition") {
    const auto suite = evaluation_suite();
    CHECK(suite.size() == 36);
    CHECK(suite.front().id == "f1");
    CHECK(suite[5].id == "f6");
    CHECK(suite[6].id == "fkm:1:1");
    CHECK(suite.back().id == "fkm:3:10");
    for (const auto& e : suite) CHECK(parse_family(e.id).id == e.id);
    CHECK(std::holds_alternative<GridFamily>(parse_family("fkm:0.4:7").spec));
    CHECK_THROWS_AS(parse_family("f9"), Error);
    CHECK_THROWS_AS(parse_family("fkm:1:0"), Error);
}

TEST_CASE("pdf values at known points") {
    CHECK(pdf(family("f1"), 0.5) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(pdf(family("f4"), 0.5) == doctest::Approx(1.0 / (0.2 * std::sqrt(2.0 * std::numbers::pi))));
    CHECK(pdf(family("f4"), 0.5) == doctest::Approx(1.99471).epsilon(1e-5));
    CHECK(pdf(family("f2"), -0.1) == 0.0);
    CHECK(pdf(Gamma{1.0, 2.0}, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("grid families are symmetric about one half") {
    const auto grid = linspace(-1.0, 2.0, 501);
    for (double k : {1.0, 2.0, 3.0, 0.4}) {
        for (int m = 1; m <= 10; ++m) {
            const GridFamily fam{k, m};
            for (std::size_t i = 0; i < grid.size(); ++i) {
                CHECK(pdf(fam, grid[i]) == doctest::Approx(pdf(fam, 1.0 - grid[i])).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("grid family dispersion conventions") {
    const auto var = expand(GridFamily{1.0, 2});
    const auto sd = expand(GridFamily{1.0, 2, Dispersion::Std});
    REQUIRE(var.means.size() == 2);
    CHECK(var.means[0] == doctest::Approx(1.0 / 3.0));
    CHECK(var.stds[0] == doctest::Approx(std::sqrt(1.0 / (8.0 * 9.0))));
    CHECK(sd.stds[0] == doctest::Approx(1.0 / (8.0 * 9.0)));
}

TEST_CASE("every family integrates to one") {
    for (const auto& e : evaluation_suite()) {
        CAPTURE(e.id);
        CHECK(std::abs(integrate(e.spec, -1.0, 6.0, 140001) - 1.0) < 1e-3);
    }
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(validate(Laplace{0.0, -1.0}), Error);
    CHECK_THROWS_AS(validate(Gamma{0.0, 1.0}), Error);
    CHECK_THROWS_AS(validate(GaussianMixture{{0.5, 0.6}, {0.0, 1.0}, {1.0, 1.0}}), Error);
    CHECK_THROWS_AS(validate(GaussianMixture{{1.0}, {0.0, 1.0}, {1.0}}), Error);
    CHECK_NOTHROW(validate(family("f6")));
}

TEST_CASE("seed derivation is deterministic and key-sensitive") {
    const auto a = Rng::derive_seed(7, {1, 2, 3});
    CHECK(a == Rng::derive_seed(7, {1, 2, 3}));
    CHECK(a != Rng::derive_seed(7, {1, 2, 4}));
    CHECK(a != Rng::derive_seed(8, {1, 2, 3}));
    Rng r1(a);
    Rng r2(a);
    for (int i = 0; i < 10; ++i) CHECK(r1.uniform() == r2.uniform());
}

TEST_CASE("sampling matches the pdf") {
    for (const auto& e : evaluation_suite()) {
        CAPTURE(e.id);
        Rng rng(Rng::derive_seed(42, {std::hash<std::string>{}(e.id)}));
        CHECK(ks_distance(e.spec, draw(e.spec, 10000, rng)) < 0.02);
    }
}

TEST_CASE("f4 sample mean") {
    Rng rng(123);
    const auto xs = draw(family("f4"), 100000, rng);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    CHECK(std::abs(mean - 0.5) < 0.003);
}

TEST_CASE("laplace inverse transform is centered") {
    Rng rng(1);
    const auto xs = draw(family("f1"), 20000, rng);
    std::vector<double> sorted = xs;
    std::nth_element(sorted.begin(), sorted.begin() + 10000, sorted.end());
    CHECK(std::abs(sorted[10000] - 0.5) < 0.01);
}

TEST_CASE("true unimodal categories") {
    const auto grid = default_truth_grid();
    CHECK(grid.size() == 500);
    CHECK(grid.front() == -1.0);
    CHECK(grid.back() == 2.0);
    CHECK(true_ucat(family("f5"), grid) == 2);
    CHECK(true_ucat(family("fkm:1:6"), grid) == 3);
    CHECK(true_ucat(family("f4"), grid) == 1);
    CHECK(true_ucat(family("f1"), grid) == 1);
    CHECK(true_ucat(family("f6"), grid) == 3);
}

TEST_CASE("well separated grid families have m local maxima") {
    const auto grid = default_truth_grid();
    for (int m = 1; m <= 10; ++m) {
        CAPTURE(m);
        CHECK(count_local_maxima(pdf_on_grid(GridFamily{3.0, m}, grid).f) == static_cast<std::size_t>(m));
        CHECK(true_ucat(GridFamily{3.0, m}, grid) == static_cast<std::size_t>(m));
    }
}
