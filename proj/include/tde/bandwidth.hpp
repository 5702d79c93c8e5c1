#pragma once

#include "tde/kernel.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tde {

// Data-adaptive bandwidth set h_j = range / j for j = 1..n_h (strictly decreasing).
struct BandwidthGrid {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

BandwidthGrid make_bandwidth_grid(double range, std::size_t count);

/// n_h = min(n, 100) unless the full 1..n set is requested.
std::size_t default_bandwidth_count(std::size_t n, bool full_set = false) noexcept;

// How bandwidth index sets are weighted when choosing the prevalent category
// and its median. Counting is the default; Lebesgue weights each
// bandwidth by its trapezoid cell width in h and is experimental.
enum class ProfileMeasure { Counting, Lebesgue };

struct UcatProfile {
    BandwidthGrid grid;
    std::vector<std::size_t> u;       // u_X(h_j), one per bandwidth
    std::size_t m_hat = 1;            // prevalent unimodal category
    std::size_t selected_index = 0;   // 0-based index into grid
    double h_hat = 0.0;
};

// Picks the prevalent category and the median of its bandwidth index set.
struct ProfileSelection {
    std::size_t m_hat;
    std::size_t selected_index;
};

ProfileSelection select_from_profile(std::span<const std::size_t> u,
                                     std::span<const double> bandwidths = {},
                                     ProfileMeasure measure = ProfileMeasure::Counting);

struct ConfidenceBands {
    std::vector<double> levels;               // significance levels a
    std::vector<std::vector<double>> lower;   // one curve per level
    std::vector<std::vector<double>> upper;
};

/// Levels 10^-1 .. 10^-d with d = ceil(log10 n).
std::vector<double> significance_levels(std::size_t n);

/// Half-width multiplier erfinv((1 - a)^(1/m)) / sqrt(2) for multiplicity m.
double band_quantile(double a, double multiplicity);

/// Pointwise bands around an estimate from the sample variance of the
/// individual kernel contributions, corrected for the number range / width
/// of effectively independent windows.
ConfidenceBands confidence_bands(const Sample& sample, double h, const DensityGrid& estimate,
                                 KernelKind kind, EvalCounter* counter = nullptr);

ConfidenceBands confidence_bands_from_moments(const KernelMoments& moments, std::size_t n,
                                              double range, double h, KernelKind kind,
                                              std::span<const double> estimate);

struct SelectorOptions {
    std::optional<std::size_t> bandwidth_count;  // n_h override
    std::optional<std::size_t> grid_size;        // internal estimation grid, defaults to n_h
    bool full_bandwidth_set = false;             // use j = 1..n instead of 1..min(n, 100)
    ProfileMeasure measure = ProfileMeasure::Counting;
    EvalCounter* counter = nullptr;
};

struct TdeResult {
    UcatProfile profile;
    DensityGrid estimate;
    ConfidenceBands bands;
    bool degenerate = false;  // zero-range sample: point mass at the mean
};

/// Topological density estimation. For each candidate bandwidth the estimate
/// on an equispaced grid over [min X, max X] is decomposed and its unimodal
/// category recorded; the selected bandwidth is the median of the largest
/// constant-category set. Counts exactly n_h * n_x * n kernel evaluations.
TdeResult tde_select(const Sample& sample, KernelKind kind, const SelectorOptions& opts = {});

/// Among bandwidths with the prevalent category, picks the one whose component
/// mode loci are closest (Euclidean) to their mean over that set.
/// Throws ComponentCountMismatch if a decomposition in the set disagrees with m_hat.
TdeResult tde_select_stable_modes(const Sample& sample, KernelKind kind,
                                  const SelectorOptions& opts = {});

/// Index of the candidate minimizing || loci[i] - mean(loci) ||; ties go to the
/// smallest index. All rows must have equal length.
std::size_t most_stable_loci(std::span<const std::vector<double>> loci);

/// Least-squares cross-validation risk. The pairwise terms are symmetric, so
/// only i < j pairs and the diagonal are evaluated: n (n + 1) kernel
/// evaluations per call (two kernels per evaluated pair).
double cv_risk(const Sample& sample, double h, KernelKind kind, EvalCounter* counter = nullptr);

struct CvResult {
    double h = 0.0;
    std::size_t selected_index = 0;
    BandwidthGrid grid;
    std::vector<double> risk;
    DensityGrid estimate;
    ConfidenceBands bands;
};

/// Minimizes cv_risk over the bandwidth grid; the first strict minimum in grid
/// order wins. Counter total: n_h * n * (n + 1) for the risk scan plus
/// n_x * n for the final estimate.
CvResult cv_select(const Sample& sample, KernelKind kind, const SelectorOptions& opts = {});

struct AmiseResult {
    double h = 0.0;
    double risk = 0.0;
    double curvature = 0.0;  // discrete integral of (f'')^2
};

struct AmiseConstants {
    double c1;
    double c2;
};

AmiseConstants amise_constants(KernelKind kind) noexcept;

/// Plug-in bandwidth from the asymptotic MISE of a known truth on a uniform grid.
AmiseResult amise_bandwidth(const DensityGrid& truth, std::size_t n, KernelKind kind);

}  // namespace tde
