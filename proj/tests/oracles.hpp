#pragma once

#include "tde/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

// Minimum number of unimodal nonnegative integer curves summing to f, by
// exhaustive search. Each partial component is tracked as (last value,
// descending), and the state set is a multiset of those pairs.
inline int min_unimodal_components(const std::vector<int>& f) {
    using Part = std::pair<int, bool>;
    using State = std::vector<Part>;

    auto feasible = [&](int k) {
        std::set<State> states{State(static_cast<std::size_t>(k), Part{0, false})};
        for (int target : f) {
            std::set<State> next;
            for (const auto& st : states) {
                State cur = st;
                auto assign = [&](auto&& self, std::size_t idx, int left) -> void {
                    if (idx == cur.size()) {
                        if (left != 0) return;
                        State sorted = cur;
                        std::sort(sorted.begin(), sorted.end());
                        next.insert(sorted);
                        return;
                    }
                    const auto [last, desc] = st[idx];
                    for (int v = 0; v <= left; ++v) {
                        if (desc && v > last) break;
                        cur[idx] = {v, desc || v < last};
                        self(self, idx + 1, left - v);
                    }
                    cur[idx] = st[idx];
                };
                assign(assign, 0, target);
            }
            states = std::move(next);
            if (states.empty()) return false;
        }
        return true;
    };

    int k = 0;
    while (!feasible(k)) ++k;
    return k;
}

inline double gauss(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

inline double epan(double u) { return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

inline double kernel(tde::KernelKind kind, double u) {
    return kind == tde::KernelKind::Gaussian ? gauss(u) : epan(u);
}

inline double fhat(tde::KernelKind kind, const std::vector<double>& xs, double h, double x) {
    double acc = 0.0;
    for (double xj : xs) acc += kernel(kind, (x - xj) / h);
    return acc / (static_cast<double>(xs.size()) * h);
}

// Integral of fhat^2. The Epanechnikov estimate is a piecewise quadratic with
// breakpoints at X_j +- h, so five-point Gauss-Legendre per piece is exact up
// to rounding. The Gaussian estimate is integrated by composite Simpson.
inline double integral_fhat_sq(tde::KernelKind kind, const std::vector<double>& xs, double h) {
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    if (kind == tde::KernelKind::Epanechnikov) {
        std::vector<double> br;
        for (double x : xs) {
            br.push_back(x - h);
            br.push_back(x + h);
        }
        std::sort(br.begin(), br.end());
        static constexpr std::array<double, 5> nodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                                     -0.9061798459386640, 0.9061798459386640};
        static constexpr std::array<double, 5> weights{0.5688888888888889, 0.4786286704993665,
                                                       0.4786286704993665, 0.2369268850561891,
                                                       0.2369268850561891};
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < br.size(); ++i) {
            const double a = br[i];
            const double b = br[i + 1];
            if (b <= a) continue;
            const double mid = 0.5 * (a + b);
            const double half = 0.5 * (b - a);
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                const double v = fhat(kind, xs, h, mid + half * nodes[q]);
                acc += weights[q] * half * v * v;
            }
        }
        return acc;
    }
    const double a = *lo_it - 12.0 * h;
    const double b = *hi_it + 12.0 * h;
    const int m = 20000;
    const double dx = (b - a) / m;
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double v = fhat(kind, xs, h, a + i * dx);
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += w * v * v;
    }
    return acc * dx / 3.0;
}

// Least-squares cross-validation criterion:
// integral of fhat^2 minus (2/n) sum_i fhat_{-i}(X_i).
inline double lscv(tde::KernelKind kind, const std::vector<double>& xs, double h) {
    const double n = static_cast<double>(xs.size());
    double loo = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (j != i) acc += kernel(kind, (xs[i] - xs[j]) / h);
        }
        loo += acc / ((n - 1.0) * h);
    }
    return integral_fhat_sq(kind, xs, h) - 2.0 / n * loo;
}

// Solves erf(x) = y by bisection.
inline double erfinv_bisect(double y) {
    double lo = 0.0;
    double hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Nonnegative curve of length 1..64 mixing uniform noise, sparse zeros,
// small integers, and values spread over six decades.
inline std::vector<double> random_curve(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> len(1, 64);
    std::uniform_int_distribution<int> style(0, 3);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<double> f(static_cast<std::size_t>(len(rng)));
    const int s = style(rng);
    for (auto& v : f) {
        double x = ud(rng);
        if (s == 1 && ud(rng) < 0.4) x = 0.0;
        if (s == 2) x = std::floor(x * 4.0);
        if (s == 3) x *= std::pow(10.0, 6.0 * ud(rng) - 3.0);
        v = x;
    }
    if (*std::max_element(f.begin(), f.end()) <= 0.0) f[f.size() / 2] = 1.0;
    return f;
}

}  // namespace oracle
