#include "ewi/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ewi/quadrature.hpp"

namespace ewi {

PotentialConfig::PotentialConfig(double v1, double kappa, double beta)
    : v1_(v1), kappa_(kappa), beta_(beta)
{
    const auto bad = violations(v1, kappa, beta);
    if (!bad.empty()) {
        std::string msg = "PotentialConfig: ";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw DomainError(msg);
    }
}

std::vector<std::string> PotentialConfig::violations(double v1, double kappa, double beta)
{
    std::vector<std::string> out;
    if (!(std::isfinite(v1) && v1 > 0)) out.push_back("v1 must be finite and > 0");
    if (!(std::isfinite(kappa) && kappa > 0)) out.push_back("kappa must be finite and > 0");
    if (!(std::isfinite(beta) && beta > 0 && beta < 1)) out.push_back("beta must satisfy 0 < beta < 1");
    return out;
}

double PotentialConfig::potential(double z, bool second) const
{
    return (second ? v2() : v1_) * std::exp(-2.0 * kappa_ * z);
}

double PotentialConfig::turning_point(double energy, bool second) const
{
    if (!(energy > 0)) throw DomainError("turning_point: energy must be > 0");
    return std::log((second ? v2() : v1_) / energy) / (2.0 * kappa_);
}

nlohmann::json PotentialConfig::to_json() const
{
    return {{"v1", v1_}, {"kappa", kappa_}, {"beta", beta_}};
}

IncidentState::IncidentState(double p) : p0(p)
{
    if (!(std::isfinite(p) && p > 0)) throw DomainError("IncidentState: p0 must be finite and > 0");
}

std::string to_string(RecoilKind kind)
{
    switch (kind) {
    case RecoilKind::None: return "none";
    case RecoilKind::Isotropic: return "isotropic";
    case RecoilKind::Dipole: return "dipole";
    }
    return "unknown";
}

RecoilKind recoil_kind_from_string(const std::string& name)
{
    if (name == "none") return RecoilKind::None;
    if (name == "isotropic") return RecoilKind::Isotropic;
    if (name == "dipole") return RecoilKind::Dipole;
    throw DomainError("unknown recoil model '" + name + "' (expected none|isotropic|dipole)");
}

double recoil_weight(const RecoilModel& model, double k)
{
    const double k0 = model.k0;
    if (std::fabs(k) > k0) return 0.0;
    switch (model.kind) {
    case RecoilKind::None: return 0.0;
    case RecoilKind::Isotropic: return 0.5 / k0;
    case RecoilKind::Dipole: {
        const double u = k / k0;
        return (3.0 / (16.0 * k0)) * (3.0 - u * u);
    }
    }
    return 0.0;
}

std::vector<RecoilNode> recoil_nodes(const RecoilModel& model, int n)
{
    if (n < 1 || n % 2 == 0)
        throw DomainError("recoil_nodes: node count must be odd and >= 1 (k = 0 must be a node), got " +
                          std::to_string(n));
    if (!(model.k0 > 0)) throw DomainError("recoil_nodes: k0 must be > 0");
    if (model.kind == RecoilKind::None) return {{0.0, 1.0}};

    const QuadratureRule rule = gauss_legendre(n);
    std::vector<RecoilNode> nodes(n);
    for (int i = 0; i < n; ++i) {
        const double k = model.k0 * rule.nodes[i];
        nodes[i] = {k, rule.weights[i] * model.k0 * recoil_weight(model, k)};
    }
    // Enforce exact mirror symmetry of the weights.
    for (int i = 0; i < n / 2; ++i) {
        const double w = 0.5 * (nodes[i].weight + nodes[n - 1 - i].weight);
        nodes[i].weight = nodes[n - 1 - i].weight = w;
        nodes[n - 1 - i].k = -nodes[i].k;
    }
    // Low-order rules do not integrate the dipole density exactly (n = 1 gives 9/8).
    double sum = 0;
    for (const auto& node : nodes) sum += node.weight;
    for (auto& node : nodes) node.weight /= sum;
    return nodes;
}

std::vector<double> default_momentum_grid(double p0, double beta, double k0, int n)
{
    if (!(p0 > 0 && beta > 0 && beta < 1 && k0 > 0 && n >= 2))
        throw DomainError("default_momentum_grid: need p0 > 0, 0 < beta < 1, k0 > 0, n >= 2");
    const double lo = 0.9 * std::sqrt(beta) * p0;
    const double hi = 1.1 * (p0 + k0);
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = lo + (hi - lo) * i / (n - 1);
    return grid;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y)
{
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return sum;
}

MomentumDistribution::MomentumDistribution(std::vector<double> p_grid, std::vector<double> density,
                                           NormConvention convention, nlohmann::json meta)
    : p_(std::move(p_grid)), density_(std::move(density)), convention_(convention), meta_(std::move(meta))
{
    if (p_.size() != density_.size())
        throw DomainError("MomentumDistribution: grid and density lengths differ");
    if (p_.size() < 2) throw DomainError("MomentumDistribution: need at least two samples");
    for (std::size_t i = 0; i < p_.size(); ++i) {
        if (!std::isfinite(p_[i])) throw DomainError("MomentumDistribution: non-finite momentum");
        if (i > 0 && !(p_[i] > p_[i - 1]))
            throw DomainError("MomentumDistribution: momentum grid must be strictly increasing");
        if (!(std::isfinite(density_[i]) && density_[i] >= 0.0)) {
            std::ostringstream os;
            os << "MomentumDistribution: density must be finite and >= 0 (index " << i << ", value "
               << density_[i] << ")";
            throw DomainError(os.str());
        }
    }
    if (convention_ == NormConvention::UnitIntegral) {
        const double total = integral();
        if (std::fabs(total - 1.0) > 1e-9)
            throw DomainError("MomentumDistribution: UnitIntegral density integrates to " + std::to_string(total));
    }
}

MomentumDistribution MomentumDistribution::unit_integral(std::vector<double> p_grid, std::vector<double> density,
                                                         nlohmann::json meta)
{
    const double total = trapezoid(p_grid, density);
    if (!(total > 0)) throw NumericalError("MomentumDistribution: cannot normalize a density with zero integral");
    for (double& d : density) d /= total;
    return MomentumDistribution(std::move(p_grid), std::move(density), NormConvention::UnitIntegral,
                                std::move(meta));
}

double MomentumDistribution::integral() const { return trapezoid(p_, density_); }

double MomentumDistribution::peak() const { return *std::max_element(density_.begin(), density_.end()); }

MomentumDistribution MomentumDistribution::normalized() const
{
    return unit_integral(p_, density_, meta_);
}

} // namespace ewi
