#pragma once

// Classical phase-space picture of the inelastic bounce.
//
// An atom enters in state |1> with speed v_i, is transferred to state |2> at
// state-1 velocity u and leaves with speed p_f. For a recoil kick k the
// transfer maps velocity u to u - k, so
//     p_f^2 = (u - k)^2 + beta (v_i^2 - u^2).
// Two transfer velocities u_A < u_B lead to the same p_f; the interferometer
// phase is the phase-space area enclosed by the two resulting paths.

#include <optional>
#include <vector>

#include "ewi/core.hpp"

namespace ewi {

enum class TrajectoryState { One, Two };

/// Bounce trajectory z(v) of a single state on its exponential potential.
class Trajectory {
public:
    Trajectory(TrajectoryState state, double asymptotic_momentum, const PotentialConfig& config);

    /// Height at velocity v, |v| < asymptotic momentum. The turning point is at v = 0.
    double z(double v) const;

    TrajectoryState state() const { return state_; }
    double asymptotic_momentum() const { return p_; }

private:
    TrajectoryState state_;
    double p_;
    double coefficient_;
    double kappa_;
};

struct TransferGeometry {
    double v_i;
    double v_t;
    double v_f;
    double beta;

    /// Geometry for a transfer at speed v_t (|v_t| <= v_i).
    static TransferGeometry from_transfer(double v_i, double v_t, double beta);
    /// Geometry for a final speed inside [sqrt(beta) v_i, v_i].
    static TransferGeometry from_final(double v_i, double v_f, double beta);
};

/// v_t = sqrt((v_f^2 - beta v_i^2)/(1 - beta)); DomainError outside the classical band.
double transfer_speed(double v_i, double v_f, double beta);

/// Range of final momenta reachable by two distinct transfer points for recoil k:
/// [p_min(k), v_i - |k|]. Empty (nullopt) when the range collapses or |k| > (1 - beta) v_i.
struct MomentumBand {
    double lo;
    double hi;
};
std::optional<MomentumBand> interference_band(double v_i, double beta, double k);

/// Lowest classically reachable final momentum sqrt(beta) v_i sqrt(1 - (k/v_i)^2/(1 - beta)).
/// DomainError when the square-root argument is negative.
double lowest_final_momentum(double v_i, double beta, double k);

/// State-1 transfer velocities (u_A < u_B) leading to p_f after a kick k. Both lie in
/// [-v_i, v_i] exactly when p_f is inside the interference band.
struct TransferPoints {
    double u_a;
    double u_b;
};
std::optional<TransferPoints> transfer_points(double v_i, double p_f, double beta, double k);

/// Enclosed-area phase without recoil; v_f strictly inside (sqrt(beta) v_i, v_i).
double phase_difference(double v_i, double v_f, const PotentialConfig& config);

/// Enclosed-area phase for recoil k: int_{u_A}^{u_B} [z1(v) - z2(v - k)] dv, with z2 the
/// state-2 trajectory of asymptotic momentum p_f. Equals phase_difference at k = 0.
double phase_difference(double v_i, double p_f, const PotentialConfig& config, double k);

/// Change of the enclosed area caused by the recoil, at fixed p_f.
double recoil_phase_correction(double v_i, double p_f, const PotentialConfig& config, double k);

/// Final momenta in the interference band where the enclosed phase equals 2 pi n (n >= 1),
/// ascending. Empty when no such momentum exists.
std::vector<double> predicted_fringe_momenta(double v_i, const PotentialConfig& config, double recoil_k = 0.0);

/// hbar omega = (v_i^2 - v_f^2)/2 + omega_ew - delta12, identical for both paths.
double emitted_photon_frequency(double v_i, double v_f, double omega_ew, double delta12);

} // namespace ewi
