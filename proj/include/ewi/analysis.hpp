#pragma once

// Fringe extraction and cross-route comparison on sampled momentum densities.

#include <vector>

#include "ewi/core.hpp"

namespace ewi {

struct FringeReport {
    std::vector<double> minima;        ///< refined positions, ascending
    std::vector<double> maxima;
    std::vector<double> minima_values; ///< refined density at each minimum
    std::vector<double> maxima_values;
    double mean_spacing = 0.0;         ///< mean distance between consecutive minima (maxima if < 2 minima)
    double visibility = 0.0;           ///< mean (I_max - I_min)/(I_max + I_min) over adjacent extremum pairs
    double p_lo = 0.0;
    double p_hi = 0.0;

    bool empty() const { return minima.empty() && maxima.empty(); }
    /// Distances between consecutive minima.
    std::vector<double> minima_spacings() const;
    /// Visibility of each adjacent (max, min) pair in ascending p.
    std::vector<double> pair_visibilities() const;
    nlohmann::json to_json() const;
};

struct FringeOptions {
    double prominence = 1e-3; ///< relative to the global peak of the distribution
    bool smooth = false;      ///< Gaussian pre-smoothing, width one grid step
};

/// Local extrema of the density inside [p_lo, p_hi] found with hysteresis
/// (a turn must exceed prominence * global peak), refined by a least-squares
/// parabola over +-2 samples. Extrema on the region boundary are not fringes.
/// Fewer than two extrema yield an empty report.
FringeReport extract_fringes(const MomentumDistribution& dist, double p_lo, double p_hi, FringeOptions opts = {});

/// [p_min(k = 0), p0]: the two-path region without recoil.
struct Region {
    double lo;
    double hi;
};
Region default_region(double p0, const PotentialConfig& config);

/// Gaussian smoothing with a kernel of width `width` (in p) on a possibly non-uniform grid.
std::vector<double> gaussian_smooth(const std::vector<double>& p, const std::vector<double>& y, double width);

/// Local cubic (four-point Lagrange) interpolation of (x, y) at x_new. Points that
/// coincide with a sample return that sample exactly. x_new must lie in [x.front(), x.back()].
std::vector<double> resample_cubic(const std::vector<double>& x, const std::vector<double>& y,
                                   const std::vector<double>& x_new);

struct RouteComparison {
    double l1 = 0.0;           ///< int |a - b| dp over the common range, in [0, 2]
    double minima_shift = 0.0; ///< mean |p_a - p_b| over matched minima
    std::size_t matched = 0;   ///< number of matched minima pairs
    double overlap = 0.0;      ///< fraction of a's support covered by b's grid
};

/// Compares two UnitIntegral distributions; b is resampled onto a's grid. Minima are
/// taken from [region.lo, region.hi] when given, otherwise from the common range, and
/// matched nearest-neighbour within half of a's mean spacing. Throws DomainError if b
/// covers less than 90% of a's support (density > 1e-6 of peak).
RouteComparison compare_routes(const MomentumDistribution& a, const MomentumDistribution& b,
                               const Region* region = nullptr, FringeOptions opts = {});

} // namespace ewi
