#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace tde {

// Components of a unimodal decomposition, in left-to-right sweep order, each
// on the caller's grid. Components sum to `total` up to rounding.
struct UnimodalDecomposition {
    std::vector<std::vector<double>> components;
    std::vector<double> total;
    std::vector<std::size_t> mode_locus;  // index of each component's maximum

    std::size_t size() const noexcept { return components.size(); }
};

inline constexpr double kDefaultDropThreshold = std::numeric_limits<double>::epsilon();

/// Sweep decomposition of a nonnegative curve.
///
/// The curve is padded with a zero on each side and normalized to unit sum.
/// Each pass peels off one component: it copies the residual up to the first
/// strict descent, then follows only the residual's descents to the right.
/// Components whose normalized mass is at most `drop_threshold` are discarded.
///
/// Throws NegativeInput for negative or non-finite values and EmptyInput when
/// the curve has no positive mass.
UnimodalDecomposition sweep_decompose(std::span<const double> f,
                                      double drop_threshold = kDefaultDropThreshold);

/// Unimodal category of a discretized curve: the number of sweep components.
std::size_t ucat(std::span<const double> f, double drop_threshold = kDefaultDropThreshold);

/// Number of local maxima after zero-padding both ends. A maximum is a change
/// of the difference sign from + to -, with flat steps skipped, so a plateau
/// at the top counts once.
std::size_t count_local_maxima(std::span<const double> f);

/// Nondecreasing up to some index and nonincreasing after it.
bool is_unimodal(std::span<const double> f);

}  // namespace tde
