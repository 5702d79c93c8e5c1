#include "tde/kernel.hpp"

#include "tde/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace tde {

namespace {

constexpr double kInvSqrt2Pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
constexpr double kInvSqrt4Pi = 0.5 * std::numbers::inv_sqrtpi;

inline double gaussian(double u) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

inline double epanechnikov(double u) noexcept { return 0.75 * std::max(0.0, 1.0 - u * u); }

void require_bandwidth(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorCode::NonPositiveBandwidth,
                    "bandwidth must be positive and finite, got " + std::to_string(h));
    }
}

}  // namespace

std::string_view to_string(KernelKind kind) noexcept {
    return kind == KernelKind::Gaussian ? "gaussian" : "epanechnikov";
}

KernelKind parse_kernel(std::string_view name) {
    if (name == "gaussian") return KernelKind::Gaussian;
    if (name == "epanechnikov") return KernelKind::Epanechnikov;
    throw Error(ErrorCode::InvalidConfig, "unknown kernel '" + std::string(name) + "'");
}

double kernel_value(KernelKind kind, double u, EvalCounter* counter) noexcept {
    count(counter, 1);
    return kind == KernelKind::Gaussian ? gaussian(u) : epanechnikov(u);
}

double kernel_convolution_value(KernelKind kind, double u, EvalCounter* counter) noexcept {
    count(counter, 1);
    if (kind == KernelKind::Gaussian) return kInvSqrt4Pi * std::exp(-0.25 * u * u);
    const double a = std::abs(u);
    if (a > 2.0) return 0.0;
    const double t = 2.0 - a;
    return (3.0 / 160.0) * t * t * t * (a * a + 6.0 * a + 4.0);
}

double effective_width(KernelKind kind, double h) noexcept {
    return kind == KernelKind::Gaussian ? 3.0 * h : 2.0 * h;
}

Sample::Sample(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error(ErrorCode::EmptySample, "sample has no points");
    for (double v : points_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSample, "sample contains a non-finite value");
    }
    sorted_ = points_;
    std::sort(sorted_.begin(), sorted_.end());
    min_ = sorted_.front();
    max_ = sorted_.back();
}

double Sample::mean() const noexcept {
    return std::accumulate(points_.begin(), points_.end(), 0.0) / static_cast<double>(points_.size());
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 0) return out;
    if (count == 1) {
        out[0] = hi;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
    out.back() = hi;
    return out;
}

void require_increasing(std::span<const double> grid) {
    if (grid.empty()) throw Error(ErrorCode::InvalidGrid, "grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw Error(ErrorCode::InvalidGrid, "grid contains a non-finite value");
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw Error(ErrorCode::InvalidGrid, "grid is not strictly increasing at index " + std::to_string(i));
        }
    }
}

double kernel_reach(KernelKind kind) noexcept {
    // exp(-x) is exactly 0.0 in double precision for x > 745.2.
    return kind == KernelKind::Gaussian ? std::sqrt(1500.0) : 1.0;
}

double convolution_reach(KernelKind kind) noexcept {
    return kind == KernelKind::Gaussian ? std::sqrt(3000.0) : 2.0;
}

namespace {

// Calls visit(i, first, last) with the sorted-sample index range that can
// contribute to grid point i.
template <class Visit>
void for_each_window(std::span<const double> sorted, double half_width, std::span<const double> grid,
                     Visit&& visit) {
    const double w = half_width * (1.0 + 1e-9);
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        while (lo < sorted.size() && sorted[lo] < x - w) ++lo;
        if (hi < lo) hi = lo;
        while (hi < sorted.size() && sorted[hi] <= x + w) ++hi;
        visit(i, lo, hi);
    }
}

}  // namespace

DensityGrid kde_on_grid(const Sample& sample, double h, std::span<const double> grid,
                        KernelKind kind, EvalCounter* counter) {
    require_bandwidth(h);
    require_increasing(grid);
    const auto pts = sample.sorted();
    const double inv_h = 1.0 / h;
    const double scale = inv_h / static_cast<double>(pts.size());
    DensityGrid out{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size(), 0.0)};
    for_each_window(pts, kernel_reach(kind) * h, grid, [&](std::size_t i, std::size_t lo, std::size_t hi) {
        const double x = grid[i];
        double acc = 0.0;
        if (kind == KernelKind::Gaussian) {
            for (std::size_t j = lo; j < hi; ++j) acc += gaussian((x - pts[j]) * inv_h);
        } else {
            for (std::size_t j = lo; j < hi; ++j) acc += epanechnikov((x - pts[j]) * inv_h);
        }
        out.f[i] = acc * scale;
    });
    count(counter, static_cast<std::uint64_t>(grid.size()) * pts.size());
    return out;
}

KernelMoments kernel_moments(const Sample& sample, double h, std::span<const double> grid,
                             KernelKind kind, EvalCounter* counter) {
    require_bandwidth(h);
    require_increasing(grid);
    const auto pts = sample.sorted();
    const double inv_h = 1.0 / h;
    KernelMoments out{std::vector<double>(grid.size(), 0.0), std::vector<double>(grid.size(), 0.0)};
    auto accumulate = [&](auto kernel) {
        for_each_window(pts, kernel_reach(kind) * h, grid, [&](std::size_t i, std::size_t lo, std::size_t hi) {
            const double x = grid[i];
            double s = 0.0;
            double s2 = 0.0;
            for (std::size_t j = lo; j < hi; ++j) {
                const double y = kernel((x - pts[j]) * inv_h) * inv_h;
                s += y;
                s2 += y * y;
            }
            out.sum[i] = s;
            out.sum_sq[i] = s2;
        });
    };
    if (kind == KernelKind::Gaussian) {
        accumulate(gaussian);
    } else {
        accumulate(epanechnikov);
    }
    count(counter, static_cast<std::uint64_t>(grid.size()) * pts.size());
    return out;
}

}  // namespace tde
