#pragma once

// Time-independent route. The reflected eigenstates of the exponential mirror
// are psi(z) = N K_{i p/kappa}(sqrt(2 V)/kappa e^{-kappa z}) with N chosen so the
// asymptotic standing wave 2 cos(p z + delta) has the same amplitude for all p.
// The transfer amplitude to a final state p with recoil k is
//     phi_k(p) = int psi_1(z) e^{-kappa z} e^{-i k z} psi_{2,p}(z) dz.

#include <complex>
#include <string>
#include <vector>

#include "ewi/core.hpp"

namespace ewi {

struct StationaryState {
    double asymptotic_momentum;
    double potential_coefficient;
    double kappa;
};

/// Normalized eigenfunction value; finite for every z.
double eigenfunction(const StationaryState& state, double z);

/// Discretization of the overlap integral.
struct OverlapConfig {
    double z_min = 0;
    double z_max = 0; ///< start of the analytic tail; the sum runs to +infinity
    double dz = 0;
    std::vector<double> p_grid;
    RecoilModel recoil;
    int k_nodes = 41;

    /// Window where V1 e^{-2 kappa z_min} >= 1e3 E and V e^{-2 kappa z_max} <= 1e-6 E
    /// for every energy involved, step 2 pi / (20 (p0 + p_max + k0)) and the
    /// 600-point grid over [0.9 sqrt(beta) p0, 1.1 (p0 + k0)].
    static OverlapConfig defaults(double p0, const PotentialConfig& config, RecoilModel recoil = {},
                                  int k_nodes = 41);

    /// Every violated window/grid invariant for this p0 and mirror.
    std::vector<std::string> violations(double p0, const PotentialConfig& config) const;

    nlohmann::json to_json() const;
};

/// Overlap amplitudes phi_k(p) on oc.p_grid for a list of recoil momenta.
///
/// psi_1 and e^{-kappa z} are tabulated once; psi_{2,p} once per p and reused for
/// every k. The integral is the infinite trapezoid sum on the uniform grid; the
/// part beyond z_max is summed in closed form from the convergent expansion of
/// both eigenfunctions, so the window does not truncate the slowly decaying tail.
class OverlapEngine {
public:
    OverlapEngine(double p0, const PotentialConfig& config, OverlapConfig oc);

    struct Result {
        std::vector<double> k;
        /// amplitude[ik][ip]
        std::vector<std::vector<std::complex<double>>> amplitude;
        /// |phi_h - phi_{2h}| per (k, p), an upper estimate of the discretization error.
        std::vector<std::vector<double>> error;
    };

    Result amplitudes(const std::vector<double>& ks) const;

    const OverlapConfig& config() const { return oc_; }
    std::size_t grid_size() const { return n_grid_; }

private:
    double p0_;
    PotentialConfig pot_;
    OverlapConfig oc_;
    std::size_t n_grid_ = 0;  // samples z_0..z_{n-1}; z_n = z_max starts the tail
    std::size_t j_cut_ = 0;   // below j_cut, psi_1 e^{-kappa z} is negligible
    std::vector<double> a_;   // psi_1(z_j) e^{-kappa z_j}
    std::vector<std::complex<double>> tail1_coef_, tail1_rate_;
};

/// |phi_k(p)|^2 on oc.p_grid (Raw convention).
MomentumDistribution overlap_spectrum(double p0, const PotentialConfig& config, double k, const OverlapConfig& oc);

/// overlap_spectrum for several k values from one shared set of tables.
std::vector<MomentumDistribution> overlap_sweep(double p0, const PotentialConfig& config,
                                                const std::vector<double>& ks, const OverlapConfig& oc);

/// Recoil-weighted sum over recoil_nodes(oc.recoil, oc.k_nodes), UnitIntegral.
MomentumDistribution averaged_spectrum(double p0, const PotentialConfig& config, const OverlapConfig& oc);

struct ClassicalBoundaries {
    double p_min;     ///< curved lower limit sqrt(beta) p0 sqrt(1 - (k/p0)^2/(1 - beta))
    double p_line_lo; ///< p0 - |k|
    double p_line_hi; ///< p0 + |k|
};

ClassicalBoundaries classical_boundaries(double p0, const PotentialConfig& config, double k);

} // namespace ewi
