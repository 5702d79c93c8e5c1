#include "tde/bandwidth.hpp"

#include "tde/error.hpp"
#include "tde/unimodal.hpp"

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

namespace tde {

namespace {

using QuietPolicy = boost::math::policies::policy<
    boost::math::policies::overflow_error<boost::math::policies::ignore_error>,
    boost::math::policies::domain_error<boost::math::policies::ignore_error>>;

constexpr double kGaussCenter = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
constexpr double kEpanCenter = 0.75;

std::size_t half_up(std::size_t k) noexcept { return (k + 1) / 2; }

std::vector<double> cell_weights(std::span<const double> h) {
    std::vector<double> w(h.size(), 1.0);
    if (h.size() < 2) return w;
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double left = j > 0 ? h[j - 1] : h[j];
        const double right = j + 1 < h.size() ? h[j + 1] : h[j];
        w[j] = 0.5 * std::abs(left - right);
    }
    return w;
}

struct SweepState {
    std::vector<KernelMoments> moments;  // one per bandwidth
    std::vector<double> grid;            // internal estimation grid
};

std::vector<double> estimate_from(const KernelMoments& m, std::size_t n) {
    std::vector<double> f(m.sum.size());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = m.sum[i] * inv_n;
    return f;
}

TdeResult degenerate_result(const Sample& sample) {
    TdeResult out;
    out.degenerate = true;
    out.profile.grid.values = {0.0};
    out.profile.u = {1};
    out.profile.m_hat = 1;
    out.profile.selected_index = 0;
    out.profile.h_hat = 0.0;
    out.estimate.x = {sample.mean()};
    out.estimate.f = {1.0};
    out.bands.levels = {1.0};
    out.bands.lower = {{1.0}};
    out.bands.upper = {{1.0}};
    return out;
}

struct SweepOutcome {
    TdeResult result;
    SweepState state;
};

SweepOutcome run_tde_sweep(const Sample& sample, KernelKind kind, const SelectorOptions& opts) {
    SweepOutcome out;
    const std::size_t n = sample.size();
    const std::size_t n_h = opts.bandwidth_count.value_or(default_bandwidth_count(n, opts.full_bandwidth_set));
    const std::size_t n_x = opts.grid_size.value_or(n_h);
    if (n_h == 0) throw Error(ErrorCode::InvalidConfig, "bandwidth count must be positive");
    if (n_x == 0) throw Error(ErrorCode::InvalidConfig, "grid size must be positive");

    auto& profile = out.result.profile;
    profile.grid = make_bandwidth_grid(sample.range(), n_h);
    out.state.grid = linspace(sample.min(), sample.max(), n_x);
    out.state.moments.reserve(n_h);
    profile.u.reserve(n_h);
    for (double h : profile.grid.values) {
        out.state.moments.push_back(kernel_moments(sample, h, out.state.grid, kind, opts.counter));
        profile.u.push_back(ucat(estimate_from(out.state.moments.back(), n)));
    }

    const auto pick = select_from_profile(profile.u, profile.grid.values, opts.measure);
    profile.m_hat = pick.m_hat;
    profile.selected_index = pick.selected_index;
    profile.h_hat = profile.grid.values[pick.selected_index];
    return out;
}

void finish_at(TdeResult& result, const SweepState& state, const Sample& sample, KernelKind kind) {
    const auto& m = state.moments[result.profile.selected_index];
    result.estimate.x = state.grid;
    result.estimate.f = estimate_from(m, sample.size());
    result.bands = confidence_bands_from_moments(m, sample.size(), sample.range(),
                                                 result.profile.h_hat, kind, result.estimate.f);
}

}  // namespace

BandwidthGrid make_bandwidth_grid(double range, std::size_t count) {
    BandwidthGrid grid;
    grid.values.resize(count);
    for (std::size_t j = 0; j < count; ++j) grid.values[j] = range / static_cast<double>(j + 1);
    return grid;
}

std::size_t default_bandwidth_count(std::size_t n, bool full_set) noexcept {
    return full_set ? n : std::min<std::size_t>(n, 100);
}

ProfileSelection select_from_profile(std::span<const std::size_t> u, std::span<const double> bandwidths,
                                     ProfileMeasure measure) {
    if (u.empty()) throw Error(ErrorCode::EmptyInput, "empty ucat profile");
    std::vector<double> weight(u.size(), 1.0);
    if (measure == ProfileMeasure::Lebesgue) {
        if (bandwidths.size() != u.size()) {
            throw Error(ErrorCode::InvalidConfig, "Lebesgue measure needs one bandwidth per profile entry");
        }
        weight = cell_weights(bandwidths);
    }

    // std::map iterates values in ascending order, so the first maximum is the
    // smallest category among ties.
    std::map<std::size_t, double> mass;
    for (std::size_t j = 0; j < u.size(); ++j) mass[u[j]] += weight[j];
    std::size_t m_hat = mass.begin()->first;
    double best = -1.0;
    for (const auto& [value, w] : mass) {
        if (w > best) {
            best = w;
            m_hat = value;
        }
    }

    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j] == m_hat) members.push_back(j);
    }
    if (measure == ProfileMeasure::Counting) return {m_hat, members[half_up(members.size()) - 1]};

    double acc = 0.0;
    for (std::size_t j : members) {
        acc += weight[j];
        if (acc >= 0.5 * best) return {m_hat, j};
    }
    return {m_hat, members.back()};
}

std::vector<double> significance_levels(std::size_t n) {
    const auto d = static_cast<std::size_t>(std::ceil(std::log10(static_cast<double>(n))));
    std::vector<double> levels(d);
    for (std::size_t j = 0; j < d; ++j) levels[j] = std::pow(10.0, -static_cast<double>(j + 1));
    return levels;
}

double band_quantile(double a, double multiplicity) {
    const double p = std::pow(1.0 - a, 1.0 / multiplicity);
    return boost::math::erf_inv(p, QuietPolicy()) / std::numbers::sqrt2;
}

ConfidenceBands confidence_bands_from_moments(const KernelMoments& moments, std::size_t n, double range,
                                              double h, KernelKind kind, std::span<const double> estimate) {
    ConfidenceBands bands;
    bands.levels = significance_levels(n);
    const double multiplicity = range / effective_width(kind, h);
    const double dn = static_cast<double>(n);

    std::vector<double> se(estimate.size(), 0.0);
    if (n > 1) {
        for (std::size_t i = 0; i < se.size(); ++i) {
            const double s = moments.sum[i];
            const double var = std::max(0.0, (moments.sum_sq[i] - s * s / dn) / (dn - 1.0));
            se[i] = std::sqrt(var / dn);
        }
    }
    for (double a : bands.levels) {
        const double q = band_quantile(a, multiplicity);
        std::vector<double> lo(estimate.size());
        std::vector<double> hi(estimate.size());
        for (std::size_t i = 0; i < se.size(); ++i) {
            lo[i] = estimate[i] - q * se[i];
            hi[i] = estimate[i] + q * se[i];
        }
        bands.lower.push_back(std::move(lo));
        bands.upper.push_back(std::move(hi));
    }
    return bands;
}

ConfidenceBands confidence_bands(const Sample& sample, double h, const DensityGrid& estimate,
                                 KernelKind kind, EvalCounter* counter) {
    const auto moments = kernel_moments(sample, h, estimate.x, kind, counter);
    return confidence_bands_from_moments(moments, sample.size(), sample.range(), h, kind, estimate.f);
}

TdeResult tde_select(const Sample& sample, KernelKind kind, const SelectorOptions& opts) {
    if (sample.range() == 0.0) return degenerate_result(sample);
    auto sweep = run_tde_sweep(sample, kind, opts);
    finish_at(sweep.result, sweep.state, sample, kind);
    return std::move(sweep.result);
}

std::size_t most_stable_loci(std::span<const std::vector<double>> loci) {
    if (loci.empty()) throw Error(ErrorCode::EmptyInput, "no mode loci to compare");
    const std::size_t width = loci.front().size();
    std::vector<double> mean(width, 0.0);
    for (const auto& row : loci) {
        if (row.size() != width) {
            throw Error(ErrorCode::ComponentCountMismatch, "mode loci rows differ in length");
        }
        for (std::size_t k = 0; k < width; ++k) mean[k] += row[k];
    }
    for (double& v : mean) v /= static_cast<double>(loci.size());

    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < loci.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < width; ++k) d2 += (loci[i][k] - mean[k]) * (loci[i][k] - mean[k]);
        if (d2 < best_dist) {
            best_dist = d2;
            best = i;
        }
    }
    return best;
}

TdeResult tde_select_stable_modes(const Sample& sample, KernelKind kind, const SelectorOptions& opts) {
    if (sample.range() == 0.0) return degenerate_result(sample);
    auto sweep = run_tde_sweep(sample, kind, opts);
    auto& profile = sweep.result.profile;

    std::vector<std::size_t> members;
    std::vector<std::vector<double>> loci;
    for (std::size_t j = 0; j < profile.u.size(); ++j) {
        if (profile.u[j] != profile.m_hat) continue;
        const auto dec = sweep_decompose(estimate_from(sweep.state.moments[j], sample.size()));
        if (dec.size() != profile.m_hat) {
            throw Error(ErrorCode::ComponentCountMismatch,
                        "bandwidth " + std::to_string(profile.grid.values[j]) + " yields " +
                            std::to_string(dec.size()) + " components, expected " +
                            std::to_string(profile.m_hat));
        }
        std::vector<double> row;
        row.reserve(dec.size());
        for (std::size_t idx : dec.mode_locus) row.push_back(sweep.state.grid[idx]);
        members.push_back(j);
        loci.push_back(std::move(row));
    }
    profile.selected_index = members[most_stable_loci(loci)];
    profile.h_hat = profile.grid.values[profile.selected_index];
    finish_at(sweep.result, sweep.state, sample, kind);
    return std::move(sweep.result);
}

double cv_risk(const Sample& sample, double h, KernelKind kind, EvalCounter* counter) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw Error(ErrorCode::NonPositiveBandwidth, "bandwidth must be positive, got " + std::to_string(h));
    }
    const std::size_t n = sample.size();
    if (n < 2) throw Error(ErrorCode::DegenerateSample, "cross-validation needs at least two points");
    const auto x = sample.sorted();
    const double dn = static_cast<double>(n);
    const double c = 2.0 / (dn - 1.0);
    const double inv_h = 1.0 / h;
    const double center = kind == KernelKind::Gaussian ? kGaussCenter : kEpanCenter;

    auto term = [&](double u) {
        return kernel_convolution_value(kind, u) - c * (dn * kernel_value(kind, u) - center);
    };

    double diagonal = 0.0;
    for (std::size_t i = 0; i < n; ++i) diagonal += term(0.0);

    // Pairs farther apart than the convolution reach have K = K*K = 0 and
    // contribute the constant c * K(0) each.
    const double reach = convolution_reach(kind) * h * (1.0 + 1e-9);
    double off = 0.0;
    std::size_t near_pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + 1;
        if (kind == KernelKind::Gaussian) {
            constexpr double k2c = 0.5 * std::numbers::inv_sqrtpi;
            for (; j < n && x[j] - x[i] <= reach; ++j) {
                const double u = (x[i] - x[j]) * inv_h;
                const double u2 = u * u;
                off += k2c * std::exp(-0.25 * u2) - c * (dn * kGaussCenter * std::exp(-0.5 * u2) - center);
            }
        } else {
            for (; j < n && x[j] - x[i] <= reach; ++j) off += term((x[i] - x[j]) * inv_h);
        }
        near_pairs += j - i - 1;
    }
    const std::size_t far_pairs = n * (n - 1) / 2 - near_pairs;
    off += static_cast<double>(far_pairs) * c * center;

    count(counter, static_cast<std::uint64_t>(n) * (n + 1));
    return (diagonal + 2.0 * off) / (h * dn * dn);
}

CvResult cv_select(const Sample& sample, KernelKind kind, const SelectorOptions& opts) {
    if (sample.range() == 0.0) throw Error(ErrorCode::DegenerateSample, "sample range is zero");
    const std::size_t n = sample.size();
    const std::size_t n_h = opts.bandwidth_count.value_or(default_bandwidth_count(n, opts.full_bandwidth_set));
    const std::size_t n_x = opts.grid_size.value_or(n_h);
    if (n_h == 0) throw Error(ErrorCode::InvalidConfig, "bandwidth count must be positive");
    if (n_x == 0) throw Error(ErrorCode::InvalidConfig, "grid size must be positive");

    CvResult out;
    out.grid = make_bandwidth_grid(sample.range(), n_h);
    out.risk.reserve(n_h);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_h; ++j) {
        out.risk.push_back(cv_risk(sample, out.grid.values[j], kind, opts.counter));
        if (out.risk.back() < best) {
            best = out.risk.back();
            out.selected_index = j;
        }
    }
    out.h = out.grid.values[out.selected_index];

    const auto grid = linspace(sample.min(), sample.max(), n_x);
    const auto moments = kernel_moments(sample, out.h, grid, kind, opts.counter);
    out.estimate.x = grid;
    out.estimate.f = estimate_from(moments, n);
    out.bands = confidence_bands_from_moments(moments, n, sample.range(), out.h, kind, out.estimate.f);
    return out;
}

AmiseConstants amise_constants(KernelKind kind) noexcept {
    if (kind == KernelKind::Gaussian) return {1.0, 0.5 * std::sqrt(std::numbers::pi)};
    return {1.0 / 5.0, 3.0 / 5.0};
}

AmiseResult amise_bandwidth(const DensityGrid& truth, std::size_t n, KernelKind kind) {
    if (truth.x.size() < 3 || truth.f.size() != truth.x.size()) {
        throw Error(ErrorCode::GridTooShort, "curvature needs at least three grid points");
    }
    if (n == 0) throw Error(ErrorCode::InvalidConfig, "sample size must be positive");
    const auto [c1, c2] = amise_constants(kind);
    const std::size_t nx = truth.x.size();
    const double dx = (truth.x.back() - truth.x.front()) / static_cast<double>(nx - 1);

    double c3 = 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        const double d2 = (truth.f[i - 1] - 2.0 * truth.f[i] + truth.f[i + 1]) / (dx * dx);
        c3 += d2 * d2;
    }
    c3 *= dx;

    AmiseResult out;
    out.curvature = c3;
    out.h = std::pow(c1, -0.4) * std::pow(c2, 0.2) * std::pow(c3, -0.2) * std::pow(static_cast<double>(n), -0.2);
    out.risk = 0.25 * std::pow(out.h, 4) * c3 + c2 / (out.h * static_cast<double>(n));
    return out;
}

}  // namespace tde
