#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tde {

enum class KernelKind { Gaussian, Epanechnikov };

std::string_view to_string(KernelKind kind) noexcept;
KernelKind parse_kernel(std::string_view name);

// Counts single kernel evaluations. Selectors take an optional pointer; a null
// counter means nothing is tallied. Counts are added in bulk per loop, so the
// hot loops carry no per-evaluation branch.
class EvalCounter {
public:
    void add(std::uint64_t evals) noexcept { kernel_evals_ += evals; }
    void reset() noexcept { kernel_evals_ = 0; }
    std::uint64_t read() const noexcept { return kernel_evals_; }

private:
    std::uint64_t kernel_evals_ = 0;
};

inline void count(EvalCounter* counter, std::uint64_t evals) noexcept {
    if (counter != nullptr) counter->add(evals);
}

/// K(u) for the given kernel; both kernels integrate to one.
double kernel_value(KernelKind kind, double u, EvalCounter* counter = nullptr) noexcept;

/// (K * K)(u), the self-convolution used by the least-squares CV risk.
double kernel_convolution_value(KernelKind kind, double u,
                                EvalCounter* counter = nullptr) noexcept;

/// Effective kernel width used by the confidence-band multiplicity correction.
double effective_width(KernelKind kind, double h) noexcept;

// Observed data X_1..X_n with its cached range.
class Sample {
public:
    explicit Sample(std::vector<double> points);

    std::span<const double> points() const noexcept { return points_; }
    std::span<const double> sorted() const noexcept { return sorted_; }
    std::size_t size() const noexcept { return points_.size(); }
    double min() const noexcept { return min_; }
    double max() const noexcept { return max_; }
    double range() const noexcept { return max_ - min_; }
    double mean() const noexcept;

private:
    std::vector<double> points_;
    std::vector<double> sorted_;
    double min_ = 0.0;
    double max_ = 0.0;
};

// A density represented on a strictly increasing grid.
struct DensityGrid {
    std::vector<double> x;
    std::vector<double> f;

    std::size_t size() const noexcept { return x.size(); }
};

std::vector<double> linspace(double lo, double hi, std::size_t count);

void require_increasing(std::span<const double> grid);

// Kernel sums walk the sorted sample with a window per grid point. Terms
// outside the window are exactly zero in double precision (compact support,
// or a Gaussian whose exponential underflows), so skipping them changes
// nothing but the work done. Counters still tally every (x_i, X_j) pair.

/// Half-width, in units of h, beyond which K(u) is exactly 0.0.
double kernel_reach(KernelKind kind) noexcept;

/// Same for the self-convolution K * K.
double convolution_reach(KernelKind kind) noexcept;

/// f_hat(x_i) = (1 / (n h)) sum_j K((x_i - X_j) / h). Adds n_x * n to counter.
DensityGrid kde_on_grid(const Sample& sample, double h, std::span<const double> grid,
                        KernelKind kind, EvalCounter* counter = nullptr);

// Per-grid-point first and second moments of the individual kernel
// contributions Y_j(x) = K((x - X_j) / h) / h. The estimate is sum / n and the
// sample variance follows from both sums, so one pass feeds both the estimate
// and its confidence bands.
struct KernelMoments {
    std::vector<double> sum;
    std::vector<double> sum_sq;
};

KernelMoments kernel_moments(const Sample& sample, double h,
                             std::span<const double> grid, KernelKind kind,
                             EvalCounter* counter = nullptr);

}  // namespace tde
