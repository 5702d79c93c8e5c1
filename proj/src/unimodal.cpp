#include "tde/unimodal.hpp"

#include "tde/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tde {

UnimodalDecomposition sweep_decompose(std::span<const double> f, double drop_threshold) {
    for (double v : f) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::NegativeInput, "f must be nonnegative and finite");
        }
    }
    const double total_mass = std::accumulate(f.begin(), f.end(), 0.0);
    if (!(total_mass > 0.0)) throw Error(ErrorCode::EmptyInput, "f has no positive mass");

    // The sweep runs on the unnormalized curve; dropping rows with mass at most
    // drop_threshold * S is the same test as on the unit-mass curve.
    const std::size_t padded = f.size() + 2;
    std::vector<double> residual(padded, 0.0);
    std::copy(f.begin(), f.end(), residual.begin() + 1);
    const double mass_floor = drop_threshold * total_mass;

    UnimodalDecomposition out;
    out.total.assign(f.begin(), f.end());

    std::vector<double> component(padded);
    std::size_t start = 0;  // residual is identically zero before this index
    while (std::any_of(residual.begin() + static_cast<std::ptrdiff_t>(start), residual.end(),
                       [](double v) { return v != 0.0; })) {
        // First strict descent; the trailing zero pad guarantees one exists.
        std::size_t peak = start;
        while (peak + 1 < padded && !(residual[peak + 1] < residual[peak])) ++peak;

        std::fill(component.begin(), component.end(), 0.0);
        double mass = 0.0;
        for (std::size_t i = start; i <= peak; ++i) {
            component[i] = residual[i];
            mass += residual[i];
            residual[i] = 0.0;
        }
        // Right of the peak the component holds its level on upward steps and
        // follows g down on downward steps, so the leftover keeps its level on
        // downward steps. Each step copies one of the two exactly, which keeps
        // the component monotone and flat stretches of the leftover flat.
        double prev_g = component[peak];
        double level = component[peak];
        double left = 0.0;
        for (std::size_t i = peak + 1; i < padded; ++i) {
            const double g = residual[i];
            if (g > prev_g) {
                left = g - level;
            } else {
                left = std::min(left, g);
                level = g - left;
            }
            prev_g = g;
            component[i] = level;
            residual[i] = left;
            mass += level;
        }
        start = peak + 1;

        if (mass > mass_floor) {
            std::vector<double> trimmed(component.begin() + 1, component.end() - 1);
            const auto top = std::max_element(trimmed.begin(), trimmed.end());
            out.mode_locus.push_back(static_cast<std::size_t>(top - trimmed.begin()));
            out.components.push_back(std::move(trimmed));
        }
    }
    return out;
}

std::size_t ucat(std::span<const double> f, double drop_threshold) {
    return sweep_decompose(f, drop_threshold).size();
}

std::size_t count_local_maxima(std::span<const double> f) {
    std::size_t maxima = 0;
    int last_sign = 0;
    double prev = 0.0;
    auto step = [&](double next) {
        const double d = next - prev;
        const int sign = (d > 0.0) - (d < 0.0);
        if (sign != 0) {
            if (last_sign > 0 && sign < 0) ++maxima;
            last_sign = sign;
        }
        prev = next;
    };
    for (double v : f) step(v);
    step(0.0);
    return maxima;
}

bool is_unimodal(std::span<const double> f) {
    std::size_t i = 1;
    while (i < f.size() && f[i] >= f[i - 1]) ++i;
    while (i < f.size() && f[i] <= f[i - 1]) ++i;
    return i >= f.size();
}

}  // namespace tde
