#pragma once

// Shared configuration and data types for all three routes.
//
// Units are fixed: hbar = m = k0 = 1. Momenta are in units of hbar*k0,
// lengths in 1/k0, times in m/(hbar*k0^2) and energies in hbar^2*k0^2/m.
// Since m = 1 a velocity and a momentum are the same number.

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ewi {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a numerical procedure cannot meet its accuracy contract
/// (integration window too small, packet touching the grid edge, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evanescent-wave mirror: state |1> sees v1*exp(-2*kappa*z), state |2> sees beta*v1*exp(-2*kappa*z).
class PotentialConfig {
public:
    PotentialConfig(double v1, double kappa, double beta);

    /// Every violated invariant, empty when the triple is valid.
    static std::vector<std::string> violations(double v1, double kappa, double beta);

    double v1() const { return v1_; }
    double kappa() const { return kappa_; }
    double beta() const { return beta_; }
    double v2() const { return beta_ * v1_; }

    /// Potential of state 1 (second == false) or state 2 (second == true) at z.
    double potential(double z, bool second = false) const;

    /// Position where coefficient*exp(-2 kappa z) equals energy.
    double turning_point(double energy, bool second = false) const;

    nlohmann::json to_json() const;

private:
    double v1_;
    double kappa_;
    double beta_;
};

/// Asymptotic incident momentum p0 of the state-|1> atoms.
struct IncidentState {
    double p0;

    explicit IncidentState(double p);
    double energy() const { return 0.5 * p0 * p0; }
};

enum class RecoilKind { None, Isotropic, Dipole };

std::string to_string(RecoilKind kind);
RecoilKind recoil_kind_from_string(const std::string& name);

/// Distribution of the z-component of the spontaneous-emission recoil.
struct RecoilModel {
    RecoilKind kind = RecoilKind::Isotropic;
    double k0 = 1.0;
};

/// Probability density of the recoil component k. Zero outside [-k0, k0].
/// For RecoilKind::None (a point mass at k = 0) the density is reported as 0
/// everywhere; use recoil_nodes() to integrate against it.
double recoil_weight(const RecoilModel& model, double k);

struct RecoilNode {
    double k;
    double weight;
};

/// Gauss-Legendre nodes on [-k0, k0] with the recoil density folded into the
/// weights. n must be odd so that k = 0 is always a node. The weights sum to 1.
std::vector<RecoilNode> recoil_nodes(const RecoilModel& model, int n);

enum class NormConvention { UnitIntegral, Raw };

/// A sampled momentum density |phi(p)|^2 together with the configuration that produced it.
class MomentumDistribution {
public:
    MomentumDistribution(std::vector<double> p_grid, std::vector<double> density,
                         NormConvention convention, nlohmann::json meta = {});

    /// Rescales raw samples to unit trapezoid integral.
    static MomentumDistribution unit_integral(std::vector<double> p_grid, std::vector<double> density,
                                              nlohmann::json meta = {});

    const std::vector<double>& p() const { return p_; }
    const std::vector<double>& density() const { return density_; }
    NormConvention convention() const { return convention_; }
    const nlohmann::json& meta() const { return meta_; }
    nlohmann::json& meta() { return meta_; }

    std::size_t size() const { return p_.size(); }
    double integral() const;
    double peak() const;

    MomentumDistribution normalized() const;

private:
    std::vector<double> p_;
    std::vector<double> density_;
    NormConvention convention_;
    nlohmann::json meta_;
};

/// Default output grid shared by the quantum routes: n points over
/// [0.9 sqrt(beta) p0, 1.1 (p0 + k0)].
std::vector<double> default_momentum_grid(double p0, double beta, double k0 = 1.0, int n = 600);

/// Trapezoid integral of samples y over the (non-uniform) grid x.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

} // namespace ewi
