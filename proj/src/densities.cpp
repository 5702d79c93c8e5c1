#include "tde/densities.hpp"

#include "tde/error.hpp"
#include "tde/unimodal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tde {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gamma_pdf(double x, double shape, double scale) {
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (shape < 1.0) return std::numeric_limits<double>::infinity();
        return shape == 1.0 ? 1.0 / scale : 0.0;
    }
    const double t = x / scale;
    return std::exp((shape - 1.0) * std::log(t) - t - std::lgamma(shape)) / scale;
}

void check_weights(std::span<const double> w, std::size_t expected) {
    if (w.size() != expected || expected == 0) {
        throw Error(ErrorCode::InvalidSpec, "mixture parameter lists differ in length");
    }
    double total = 0.0;
    for (double v : w) {
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidSpec, "mixture weights must be positive");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidSpec, "mixture weights must sum to 1");
}

void check_positive(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw Error(ErrorCode::InvalidSpec, std::string(what) + " must be positive");
        }
    }
}

std::size_t pick_component(std::span<const double> weights, double r) {
    // Last component whose cumulative lower edge lies below r.
    double edge = 0.0;
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (edge < r) chosen = i;
        edge += weights[i];
    }
    return chosen;
}

double parse_real(std::string_view text, std::string_view whole) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::InvalidSpec, "malformed family id '" + std::string(whole) + "'");
    }
    return v;
}

}  // namespace

void validate(const DensitySpec& spec) {
    std::visit(overloaded{
                   [](const Laplace& d) {
                       if (!(d.b > 0.0) || !std::isfinite(d.mu)) {
                           throw Error(ErrorCode::InvalidSpec, "Laplace scale must be positive");
                       }
                   },
                   [](const Gamma& d) {
                       check_positive(std::span(&d.shape, 1), "Gamma shape");
                       check_positive(std::span(&d.scale, 1), "Gamma scale");
                   },
                   [](const GammaMixture& d) {
                       check_weights(d.weights, d.shapes.size());
                       check_weights(d.weights, d.scales.size());
                       check_positive(d.shapes, "Gamma shapes");
                       check_positive(d.scales, "Gamma scales");
                   },
                   [](const GaussianMixture& d) {
                       check_weights(d.weights, d.means.size());
                       check_weights(d.weights, d.stds.size());
                       check_positive(d.stds, "standard deviations");
                   },
                   [](const GridFamily& d) {
                       if (d.m < 1 || !(d.k > 0.0) || !std::isfinite(d.k)) {
                           throw Error(ErrorCode::InvalidSpec, "grid family needs k > 0 and m >= 1");
                       }
                   },
               },
               spec);
}

GaussianMixture expand(const GridFamily& family) {
    const auto m = static_cast<std::size_t>(family.m);
    const double spacing = static_cast<double>(family.m + 1);
    const double dispersion = std::pow(2.0, -(family.k + 2.0)) / (spacing * spacing);
    const double std = family.dispersion == Dispersion::Variance ? std::sqrt(dispersion) : dispersion;
    GaussianMixture out;
    for (std::size_t j = 1; j <= m; ++j) {
        out.weights.push_back(1.0 / static_cast<double>(m));
        out.means.push_back(static_cast<double>(j) / spacing);
        out.stds.push_back(std);
    }
    return out;
}

double pdf(const DensitySpec& spec, double x) {
    return std::visit(overloaded{
                          [x](const Laplace& d) { return 0.5 * std::exp(-std::abs(x - d.mu) / d.b) / d.b; },
                          [x](const Gamma& d) { return gamma_pdf(x, d.shape, d.scale); },
                          [x](const GammaMixture& d) {
                              double acc = 0.0;
                              for (std::size_t i = 0; i < d.weights.size(); ++i) {
                                  acc += d.weights[i] * gamma_pdf(x, d.shapes[i], d.scales[i]);
                              }
                              return acc;
                          },
                          [x](const GaussianMixture& d) {
                              double acc = 0.0;
                              for (std::size_t i = 0; i < d.weights.size(); ++i) {
                                  acc += d.weights[i] * normal_pdf(x, d.means[i], d.stds[i]);
                              }
                              return acc;
                          },
                          [x](const GridFamily& d) { return pdf(DensitySpec{expand(d)}, x); },
                      },
                      spec);
}

DensityGrid pdf_on_grid(const DensitySpec& spec, std::span<const double> grid) {
    validate(spec);
    require_increasing(grid);
    DensitySpec resolved = spec;
    if (const auto* family = std::get_if<GridFamily>(&spec)) resolved = expand(*family);
    DensityGrid out{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) out.f[i] = pdf(resolved, grid[i]);
    return out;
}

std::uint64_t Rng::derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t state = mix(master);
    for (std::uint64_t key : keys) state = mix(state ^ mix(key));
    return state;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double std) {
    return std::normal_distribution<double>(mean, std)(engine_);
}

double Rng::gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
}

std::vector<double> draw(const DensitySpec& spec, std::size_t n, Rng& rng) {
    validate(spec);
    std::vector<double> out(n);
    std::visit(overloaded{
                   [&](const Laplace& d) {
                       for (double& v : out) {
                           const double u = rng.uniform() - 0.5;
                           const double s = (u > 0.0) - (u < 0.0);
                           v = d.mu - d.b * s * std::log(1.0 - 2.0 * std::abs(u));
                       }
                   },
                   [&](const Gamma& d) {
                       for (double& v : out) v = rng.gamma(d.shape, d.scale);
                   },
                   [&](const GammaMixture& d) {
                       for (double& v : out) {
                           const auto i = pick_component(d.weights, rng.uniform());
                           v = rng.gamma(d.shapes[i], d.scales[i]);
                       }
                   },
                   [&](const GaussianMixture& d) {
                       for (double& v : out) {
                           const auto i = pick_component(d.weights, rng.uniform());
                           v = rng.normal(d.means[i], d.stds[i]);
                       }
                   },
                   [&](const GridFamily& d) { out = draw(DensitySpec{expand(d)}, n, rng); },
               },
               spec);
    return out;
}

Sample sample(const DensitySpec& spec, std::size_t n, Rng& rng) {
    if (n == 0) throw Error(ErrorCode::EmptySample, "sample size must be positive");
    return Sample(draw(spec, n, rng));
}

std::size_t true_ucat(const DensitySpec& spec, std::span<const double> grid) {
    return ucat(pdf_on_grid(spec, grid).f);
}

std::vector<FamilyEntry> evaluation_suite(Dispersion dispersion) {
    std::vector<FamilyEntry> suite;
    suite.push_back({"f1", Laplace{0.5, 0.125}});
    {
        const double b = 1.5;
        suite.push_back({"f2", Gamma{b * b, 1.0 / (5.0 * b)}});
    }
    {
        GammaMixture mix;
        for (double b : {1.5, 3.0, 6.0}) {
            mix.weights.push_back(1.0 / 3.0);
            mix.shapes.push_back(b * b);
            mix.scales.push_back(1.0 / (8.0 * b));
        }
        suite.push_back({"f3", mix});
    }
    suite.push_back({"f4", GaussianMixture{{1.0}, {0.5}, {0.2}}});
    suite.push_back({"f5", GaussianMixture{{0.5, 0.5}, {0.35, 0.65}, {0.1, 0.1}}});
    suite.push_back({"f6", GaussianMixture{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {0.25, 0.5, 0.75}, {0.075, 0.075, 0.075}}});
    for (int k = 1; k <= 3; ++k) {
        for (int m = 1; m <= 10; ++m) {
            suite.push_back({"fkm:" + std::to_string(k) + ":" + std::to_string(m),
                             GridFamily{static_cast<double>(k), m, dispersion}});
        }
    }
    return suite;
}

FamilyEntry parse_family(std::string_view id, Dispersion dispersion) {
    if (id.size() == 2 && id[0] == 'f' && id[1] >= '1' && id[1] <= '6') {
        auto suite = evaluation_suite(dispersion);
        return suite[static_cast<std::size_t>(id[1] - '1')];
    }
    constexpr std::string_view prefix = "fkm:";
    if (id.substr(0, prefix.size()) == prefix) {
        const auto rest = id.substr(prefix.size());
        const auto colon = rest.find(':');
        if (colon != std::string_view::npos) {
            const double k = parse_real(rest.substr(0, colon), id);
            const double m = parse_real(rest.substr(colon + 1), id);
            if (m >= 1.0 && m == std::floor(m) && m <= 1000.0 && k > 0.0) {
                GridFamily family{k, static_cast<int>(m), dispersion};
                return {std::string(id), family};
            }
        }
    }
    throw Error(ErrorCode::InvalidSpec,
                "unknown family '" + std::string(id) + "' (expected f1..f6 or fkm:<k>:<m>)");
}

std::vector<double> default_truth_grid() { return linspace(-1.0, 2.0, 500); }

}  // namespace tde
