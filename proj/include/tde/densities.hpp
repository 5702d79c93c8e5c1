#pragma once

#include "tde/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tde {

struct Laplace {
    double mu;
    double b;
};

struct Gamma {
    double shape;
    double scale;
};

struct GammaMixture {
    std::vector<double> weights;
    std::vector<double> shapes;
    std::vector<double> scales;
};

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;
};

// How the dispersion term 2^-(k+2) (m+1)^-2 of the equispaced mixture family
// is read. Variance is the default; Std reads it literally as a std deviation.
enum class Dispersion { Variance, Std };

// Equal-weight Gaussian mixture with means j / (m + 1), j = 1..m.
struct GridFamily {
    double k;
    int m;
    Dispersion dispersion = Dispersion::Variance;
};

using DensitySpec = std::variant<Laplace, Gamma, GammaMixture, GaussianMixture, GridFamily>;

void validate(const DensitySpec& spec);

GaussianMixture expand(const GridFamily& family);

double pdf(const DensitySpec& spec, double x);

DensityGrid pdf_on_grid(const DensitySpec& spec, std::span<const double> grid);

// 64-bit Mersenne Twister with keyed seed derivation, so every replicate can
// own an independent stream that does not depend on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Mixes a master seed with an ordered key list (SplitMix64 finalizer).
    static std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    double normal(double mean, double std);
    double gamma(double shape, double scale);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
};

std::vector<double> draw(const DensitySpec& spec, std::size_t n, Rng& rng);

Sample sample(const DensitySpec& spec, std::size_t n, Rng& rng);

/// Unimodal category of the discretized truth.
std::size_t true_ucat(const DensitySpec& spec, std::span<const double> grid);

struct FamilyEntry {
    std::string id;  // "f1".."f6" or "fkm:<k>:<m>"
    DensitySpec spec;
};

/// f1..f6 followed by fkm for k = 1..3 (major) and m = 1..10 (minor).
std::vector<FamilyEntry> evaluation_suite(Dispersion dispersion = Dispersion::Variance);

/// Parses "f1".."f6" or "fkm:<k>:<m>" (k may be real).
FamilyEntry parse_family(std::string_view id, Dispersion dispersion = Dispersion::Variance);

/// 500 equispaced points on [-1, 2].
std::vector<double> default_truth_grid();

}  // namespace tde
