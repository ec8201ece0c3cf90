#include "ewi/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace ewi {

namespace {

void require_speed(double v, const char* what)
{
    if (!(std::isfinite(v) && v > 0)) throw DomainError(std::string(what) + " must be finite and > 0");
}

} // namespace

Trajectory::Trajectory(TrajectoryState state, double asymptotic_momentum, const PotentialConfig& config)
    : state_(state), p_(asymptotic_momentum),
      coefficient_(state == TrajectoryState::One ? config.v1() : config.v2()), kappa_(config.kappa())
{
    require_speed(p_, "Trajectory: asymptotic momentum");
}

double Trajectory::z(double v) const
{
    if (!(std::fabs(v) < p_)) throw DomainError("Trajectory::z: |v| must be below the asymptotic momentum");
    return -std::log((p_ - v) * (p_ + v) / (2.0 * coefficient_)) / (2.0 * kappa_);
}

TransferGeometry TransferGeometry::from_transfer(double v_i, double v_t, double beta)
{
    require_speed(v_i, "v_i");
    if (!(std::fabs(v_t) <= v_i)) throw DomainError("TransferGeometry: |v_t| must not exceed v_i");
    const double v_f = std::sqrt(v_t * v_t + beta * (v_i * v_i - v_t * v_t));
    return {v_i, std::fabs(v_t), v_f, beta};
}

TransferGeometry TransferGeometry::from_final(double v_i, double v_f, double beta)
{
    return {v_i, transfer_speed(v_i, v_f, beta), v_f, beta};
}

double transfer_speed(double v_i, double v_f, double beta)
{
    require_speed(v_i, "v_i");
    if (!(beta > 0 && beta < 1)) throw DomainError("transfer_speed: beta must satisfy 0 < beta < 1");
    const double lo = std::sqrt(beta) * v_i;
    // Allow round-off at the band edges.
    const double slack = 1e-14 * v_i;
    if (!(v_f >= lo - slack && v_f <= v_i + slack))
        throw DomainError("transfer_speed: v_f outside the classical band [sqrt(beta) v_i, v_i]");
    const double arg = (v_f * v_f - beta * v_i * v_i) / (1.0 - beta);
    return std::sqrt(std::max(arg, 0.0));
}

double lowest_final_momentum(double v_i, double beta, double k)
{
    require_speed(v_i, "v_i");
    if (!(beta > 0 && beta < 1)) throw DomainError("lowest_final_momentum: beta must satisfy 0 < beta < 1");
    const double r = k / v_i;
    const double arg = 1.0 - r * r / (1.0 - beta);
    if (arg < 0) throw DomainError("lowest_final_momentum: (k/p0)^2/(1-beta) exceeds 1");
    return std::sqrt(beta) * v_i * std::sqrt(arg);
}

std::optional<MomentumBand> interference_band(double v_i, double beta, double k)
{
    const double r = k / v_i;
    if (1.0 - r * r / (1.0 - beta) <= 0) return std::nullopt;
    // Beyond this kick both transfer points sit above v_i for every p_f.
    if (std::fabs(k) > (1.0 - beta) * v_i) return std::nullopt;
    const double lo = lowest_final_momentum(v_i, beta, k);
    const double hi = v_i - std::fabs(k);
    if (!(hi > lo)) return std::nullopt;
    return MomentumBand{lo, hi};
}

std::optional<TransferPoints> transfer_points(double v_i, double p_f, double beta, double k)
{
    const double a = 1.0 - beta;
    const double c = k * k + beta * v_i * v_i - p_f * p_f;
    const double disc = k * k - a * c;
    if (!(disc > 0)) return std::nullopt;
    const double sq = std::sqrt(disc);
    // Stable pair of roots of a u^2 - 2 k u + c = 0.
    const double q = k + std::copysign(sq, k == 0.0 ? 1.0 : k);
    double u1 = q / a;
    double u2 = q != 0.0 ? c / q : -u1;
    if (u1 > u2) std::swap(u1, u2);
    if (u1 < -v_i || u2 > v_i) return std::nullopt;
    return TransferPoints{u1, u2};
}

double phase_difference(double v_i, double v_f, const PotentialConfig& config)
{
    return phase_difference(v_i, v_f, config, 0.0);
}

double phase_difference(double v_i, double p_f, const PotentialConfig& config, double k)
{
    require_speed(v_i, "v_i");
    const double beta = config.beta();
    const auto band = interference_band(v_i, beta, k);
    if (!band || !(p_f > band->lo && p_f < band->hi))
        throw DomainError("phase_difference: p_f must lie strictly inside the interference band");
    const auto pts = transfer_points(v_i, p_f, beta, k);
    if (!pts) throw DomainError("phase_difference: no pair of transfer points for this p_f");

    const double centre = 0.5 * (pts->u_a + pts->u_b);
    const double half = 0.5 * (pts->u_b - pts->u_a);
    const double inv_2kappa = 0.5 / config.kappa();
    // v = centre + half sin(theta); z1 and z2 cross at both ends.
    auto integrand = [&](double theta) {
        const double v = centre + half * std::sin(theta);
        const double w = v - k;
        const double a1 = beta * (v_i - v) * (v_i + v);
        const double a2 = (p_f - w) * (p_f + w);
        if (!(a1 > 0 && a2 > 0)) return 0.0;
        return -inv_2kappa * (std::log(a1) - std::log(a2)) * half * std::cos(theta);
    };
    double err = 0.0;
    const double half_pi = 0.5 * std::numbers::pi;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, -half_pi, half_pi,
                                                                                       20, 1e-13, &err);
    if (!(err <= 1e-9 + 1e-12 * std::fabs(value)))
        throw NumericalError("phase_difference: quadrature did not reach 1e-9 rad (estimate " + std::to_string(err) +
                             ")");
    return value;
}

double recoil_phase_correction(double v_i, double p_f, const PotentialConfig& config, double k)
{
    return phase_difference(v_i, p_f, config, k) - phase_difference(v_i, p_f, config, 0.0);
}

std::vector<double> predicted_fringe_momenta(double v_i, const PotentialConfig& config, double recoil_k)
{
    std::vector<double> roots;
    const auto band = interference_band(v_i, config.beta(), recoil_k);
    if (!band) return roots;
    const double width = band->hi - band->lo;
    if (!(width > 1e-12 * v_i)) return roots;
    // Stay clear of the endpoints where the transfer points merge or reach +-v_i.
    const double lo = band->lo + 1e-9 * width;
    const double hi = band->hi - 1e-9 * width;
    auto phase = [&](double p) { return phase_difference(v_i, p, config, recoil_k); };

    const int n_scan = 400;
    double p_prev = lo;
    double f_prev = phase(lo);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int i = 1; i <= n_scan; ++i) {
        const double p = lo + (hi - lo) * i / n_scan;
        const double f = phase(p);
        // Every multiple of 2 pi crossed in (p_prev, p].
        const double n_lo = std::floor(std::min(f_prev, f) / two_pi) + 1.0;
        const double n_hi = std::floor(std::max(f_prev, f) / two_pi);
        for (double n = n_lo; n <= n_hi; n += 1.0) {
            if (n < 1.0) continue;
            const double target = two_pi * n;
            auto g = [&](double x) { return phase(x) - target; };
            double ga = f_prev - target, gb = f - target;
            if (ga == 0.0) {
                roots.push_back(p_prev);
                continue;
            }
            if (gb == 0.0) {
                if (i == n_scan) roots.push_back(p);
                continue;
            }
            std::uintmax_t iters = 100;
            const auto tol = boost::math::tools::eps_tolerance<double>(48);
            const auto bracket = boost::math::tools::toms748_solve(g, p_prev, p, ga, gb, tol, iters);
            roots.push_back(0.5 * (bracket.first + bracket.second));
        }
        p_prev = p;
        f_prev = f;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

double emitted_photon_frequency(double v_i, double v_f, double omega_ew, double delta12)
{
    if (!(v_f <= v_i)) throw DomainError("emitted_photon_frequency: requires v_f <= v_i");
    return 0.5 * (v_i * v_i - v_f * v_f) + omega_ew - delta12;
}

} // namespace ewi
