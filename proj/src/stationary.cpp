#include "ewi/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ewi/parallel.hpp"
#include "ewi/semiclassical.hpp"
#include "ewi/specfun.hpp"

namespace ewi {

namespace {

using cd = std::complex<double>;

double bessel_argument(double coefficient, double kappa, double z)
{
    return std::sqrt(2.0 * coefficient) / kappa * std::exp(-kappa * z);
}

double scaled_product(const ScaledValue& v, double ln_norm)
{
    const double ln = ln_norm + v.log_scale;
    if (ln > 709.0) throw NumericalError("eigenfunction: normalized value overflows (log scale " + std::to_string(ln) + ")");
    return v.mantissa * std::exp(ln);
}

// psi(z_max + d) = sum_a coef[a] exp(rate[a] d) for d >= 0, from
// K_{i nu}(x) = 2 Re[(i pi / (2 sinh pi nu)) I_{i nu}(x)] with x = x_Z e^{-kappa d}.
void tail_expansion(const ImagOrderBesselK& bessel, double ln_norm, double x_z, double kappa,
                    std::vector<cd>& coef, std::vector<cd>& rate)
{
    coef.clear();
    rate.clear();
    const long double nu = bessel.nu();
    const std::complex<long double> lg = bessel.log_gamma_1p();
    const long double ln_mag = std::log(0.5L * std::numbers::pi_v<long double>) -
                               static_cast<long double>(log_sinh(std::numbers::pi * bessel.nu())) + ln_norm -
                               lg.real();
    const long double phase =
        0.5L * std::numbers::pi_v<long double> + nu * std::log(0.5L * static_cast<long double>(x_z)) - lg.imag();
    std::complex<long double> g = std::polar(std::exp(ln_mag), phase);
    const long double q = 0.25L * static_cast<long double>(x_z) * x_z;
    const double p = bessel.nu() * kappa;
    const long double g0 = std::abs(g);
    for (int m = 0; m < 200; ++m) {
        if (m > 0) g *= q / (static_cast<long double>(m) * std::complex<long double>(m, nu));
        if (std::abs(g) < 1e-18L * g0) break;
        const cd gm(static_cast<double>(g.real()), static_cast<double>(g.imag()));
        const cd r(-2.0 * m * kappa, -p);
        coef.push_back(gm);
        rate.push_back(r);
        coef.push_back(std::conj(gm));
        rate.push_back(std::conj(r));
    }
}

// 1 - e^{w} without cancellation for small |w|.
cd one_minus_exp(cd w)
{
    const double a = w.real(), b = w.imag();
    const double s = std::sin(0.5 * b);
    const double re = std::expm1(a) * std::cos(b) - 2.0 * s * s;
    const double im = std::exp(a) * std::sin(b);
    return -cd(re, im);
}

// h sum_{n >= 0} f(z_max + n h) for f = psi_1 psi_2 e^{-(kappa + i k) z}.
cd tail_sum(const std::vector<cd>& c1, const std::vector<cd>& r1, const std::vector<cd>& c2,
            const std::vector<cd>& r2, double kappa, double k, double z_max, double h)
{
    const cd shift(-kappa, -k);
    cd acc = 0;
    for (std::size_t a = 0; a < c1.size(); ++a)
        for (std::size_t b = 0; b < c2.size(); ++b) acc += c1[a] * c2[b] / one_minus_exp((r1[a] + r2[b] + shift) * h);
    return h * std::exp(shift * z_max) * acc;
}

double window_z_min(double p0, double p_max, const PotentialConfig& config)
{
    const double k2 = 2.0 * config.kappa();
    const double e0 = 0.5 * p0 * p0;
    const double e_max = 0.5 * p_max * p_max;
    return std::min(std::log(config.v1() / (1e3 * e0)) / k2, std::log(config.v2() / (1e3 * e_max)) / k2);
}

double window_z_max(double p0, double p_lo, const PotentialConfig& config)
{
    const double p_small = std::min(p0, p_lo);
    return std::log(config.v1() / (1e-6 * 0.5 * p_small * p_small)) / (2.0 * config.kappa());
}

double max_step(double p0, double p_max, double k0) { return 2.0 * std::numbers::pi / (20.0 * (p0 + p_max + k0)); }

} // namespace

double eigenfunction(const StationaryState& state, double z)
{
    if (!(state.asymptotic_momentum > 0 && state.potential_coefficient > 0 && state.kappa > 0))
        throw DomainError("eigenfunction: momentum, potential coefficient and kappa must be > 0");
    if (!std::isfinite(z)) throw DomainError("eigenfunction: z must be finite");
    const double nu = state.asymptotic_momentum / state.kappa;
    const double x = bessel_argument(state.potential_coefficient, state.kappa, z);
    if (x == 0.0) throw DomainError("eigenfunction: z too large (Bessel argument underflows)");
    if (!std::isfinite(x)) return 0.0;
    const double ln_norm = log_stationary_norm(nu, state.asymptotic_momentum, state.kappa);
    return scaled_product(besselk_imag_scaled(nu, x), ln_norm);
}

OverlapConfig OverlapConfig::defaults(double p0, const PotentialConfig& config, RecoilModel recoil, int k_nodes)
{
    if (!(p0 > 0)) throw DomainError("OverlapConfig: p0 must be > 0");
    OverlapConfig oc;
    oc.recoil = recoil;
    oc.k_nodes = k_nodes;
    oc.p_grid = default_momentum_grid(p0, config.beta(), recoil.k0);
    const double p_lo = oc.p_grid.front();
    const double p_hi = oc.p_grid.back();
    oc.z_max = window_z_max(p0, p_lo, config);
    oc.z_min = window_z_min(p0, p_hi, config);
    oc.dz = max_step(p0, p_hi, recoil.k0);
    return oc;
}

std::vector<std::string> OverlapConfig::violations(double p0, const PotentialConfig& config) const
{
    std::vector<std::string> out;
    if (!(p0 > 0)) out.push_back("p0 must be > 0");
    if (p_grid.size() < 2) out.push_back("p_grid needs at least two points");
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        if (!(std::isfinite(p_grid[i]) && p_grid[i] > 0)) {
            out.push_back("p_grid values must be finite and > 0");
            break;
        }
        if (i > 0 && !(p_grid[i] > p_grid[i - 1])) {
            out.push_back("p_grid must be strictly increasing");
            break;
        }
    }
    if (!(recoil.k0 > 0)) out.push_back("recoil k0 must be > 0");
    if (k_nodes < 1 || k_nodes % 2 == 0) out.push_back("k_nodes must be odd and >= 1");
    if (!(z_max > z_min)) out.push_back("z_max must exceed z_min");
    if (!out.empty() || !(p0 > 0)) return out;

    const double p_lo = p_grid.front(), p_hi = p_grid.back();
    if (!(dz > 0) || dz > max_step(p0, p_hi, recoil.k0) * (1.0 + 1e-12))
        out.push_back("dz must be > 0 and <= 2 pi / (20 (p0 + p_max + k0)) = " +
                      std::to_string(max_step(p0, p_hi, recoil.k0)));
    if (z_min > window_z_min(p0, p_hi, config) + 1e-12)
        out.push_back("z_min not deep enough: need V(z_min) >= 1e3 E for the incident state and the largest p "
                      "(z_min <= " + std::to_string(window_z_min(p0, p_hi, config)) + ")");
    if (z_max < window_z_max(p0, p_lo, config) - 1e-12)
        out.push_back("z_max not asymptotic: need V(z_max) <= 1e-6 E for every state (z_max >= " +
                      std::to_string(window_z_max(p0, p_lo, config)) + ")");
    return out;
}

nlohmann::json OverlapConfig::to_json() const
{
    return {{"z_min", z_min},
            {"z_max", z_max},
            {"dz", dz},
            {"p_min", p_grid.empty() ? 0.0 : p_grid.front()},
            {"p_max", p_grid.empty() ? 0.0 : p_grid.back()},
            {"n_p", p_grid.size()},
            {"recoil", to_string(recoil.kind)},
            {"k0", recoil.k0},
            {"k_nodes", k_nodes}};
}

OverlapEngine::OverlapEngine(double p0, const PotentialConfig& config, OverlapConfig oc)
    : p0_(p0), pot_(config), oc_(std::move(oc))
{
    const auto bad = oc_.violations(p0, config);
    if (!bad.empty()) {
        std::string msg = "OverlapConfig: ";
        for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
        throw DomainError(msg);
    }
    const double kappa = config.kappa();
    // Align the grid so that z_max is a grid point: z_j = z_max - (n - j) dz.
    n_grid_ = static_cast<std::size_t>(std::ceil((oc_.z_max - oc_.z_min) / oc_.dz - 1e-9));
    const double nu1 = p0 / kappa;
    const ImagOrderBesselK k1(nu1);
    const double ln_n1 = log_stationary_norm(nu1, p0, kappa);
    a_.resize(n_grid_);
    double a_max = 0.0;
    for (std::size_t j = 0; j < n_grid_; ++j) {
        const double z = oc_.z_max - static_cast<double>(n_grid_ - j) * oc_.dz;
        const double x = bessel_argument(config.v1(), kappa, z);
        a_[j] = scaled_product(k1.scaled(x), ln_n1) * std::exp(-kappa * z);
        a_max = std::max(a_max, std::fabs(a_[j]));
    }
    j_cut_ = 0;
    while (j_cut_ < n_grid_ && std::fabs(a_[j_cut_]) <= 1e-22 * a_max) ++j_cut_;
    // The barrier end of the window must already be negligible.
    if (j_cut_ == 0 && std::fabs(a_[0]) > 1e-12 * a_max)
        throw NumericalError("overlap: integrand at z_min is " + std::to_string(std::fabs(a_[0]) / a_max) +
                             " of its peak; enlarge the window");
    tail_expansion(k1, ln_n1, bessel_argument(config.v1(), kappa, oc_.z_max), kappa, tail1_coef_, tail1_rate_);
}

OverlapEngine::Result OverlapEngine::amplitudes(const std::vector<double>& ks) const
{
    const double kappa = pot_.kappa();
    const double h = oc_.dz;
    const std::size_t n_active = n_grid_ - j_cut_;
    const std::size_t n_k = ks.size();
    const std::size_t n_p = oc_.p_grid.size();

    // B_k(j) = h psi_1 e^{-kappa z} e^{-i k z}
    std::vector<std::vector<cd>> b(n_k, std::vector<cd>(n_active));
    for (std::size_t ik = 0; ik < n_k; ++ik) {
        for (std::size_t j = 0; j < n_active; ++j) {
            const double z = oc_.z_max - static_cast<double>(n_grid_ - j_cut_ - j) * h;
            const double ph = -ks[ik] * z;
            b[ik][j] = h * a_[j_cut_ + j] * cd(std::cos(ph), std::sin(ph));
        }
    }

    Result res;
    res.k = ks;
    res.amplitude.assign(n_k, std::vector<cd>(n_p));
    res.error.assign(n_k, std::vector<double>(n_p));

    parallel_for(n_p, [&](std::size_t ip) {
        const double p = oc_.p_grid[ip];
        const double nu2 = p / kappa;
        const ImagOrderBesselK k2(nu2);
        const double ln_n2 = log_stationary_norm(nu2, p, kappa);
        std::vector<double> psi2(n_active);
        for (std::size_t j = 0; j < n_active; ++j) {
            const double z = oc_.z_max - static_cast<double>(n_active - j) * h;
            psi2[j] = scaled_product(k2.scaled(bessel_argument(pot_.v2(), kappa, z)), ln_n2);
        }
        std::vector<cd> c2, r2;
        tail_expansion(k2, ln_n2, bessel_argument(pot_.v2(), kappa, oc_.z_max), kappa, c2, r2);
        for (std::size_t ik = 0; ik < n_k; ++ik) {
            cd fine = 0, coarse = 0;
            const auto& bk = b[ik];
            // The coarse (2h) sub-grid shares z_max: indices with n_active - j even.
            for (std::size_t j = 0; j < n_active; ++j) {
                const cd t = bk[j] * psi2[j];
                fine += t;
                if ((n_active - j) % 2 == 0) coarse += 2.0 * t;
            }
            fine += tail_sum(tail1_coef_, tail1_rate_, c2, r2, kappa, ks[ik], oc_.z_max, h);
            coarse += tail_sum(tail1_coef_, tail1_rate_, c2, r2, kappa, ks[ik], oc_.z_max, 2.0 * h);
            res.amplitude[ik][ip] = fine;
            res.error[ik][ip] = std::abs(fine - coarse);
        }
    });
    return res;
}

namespace {

nlohmann::json stationary_meta(double p0, const PotentialConfig& config, const OverlapConfig& oc)
{
    return {{"route", "stationary"}, {"p0", p0}, {"potential", config.to_json()}, {"overlap", oc.to_json()}};
}

// Estimated error <= 1e-6 |phi| per p, with an absolute floor of 1e-9 max|phi| for
// samples at fringe zeros and in the forbidden region.
void check_errors(const OverlapEngine::Result& res, std::size_t ik, const std::vector<double>& p_grid, double& worst)
{
    double peak = 0.0;
    for (const cd& a : res.amplitude[ik]) peak = std::max(peak, std::abs(a));
    worst = 0.0;
    for (std::size_t ip = 0; ip < res.amplitude[ik].size(); ++ip) {
        const double bound = 1e-6 * std::abs(res.amplitude[ik][ip]) + 1e-9 * peak;
        const double err = res.error[ik][ip];
        worst = std::max(worst, peak > 0 ? err / peak : err);
        if (!(err <= bound))
            throw NumericalError("overlap: estimated discretization error " + std::to_string(err) + " at p = " +
                                 std::to_string(p_grid[ip]) +
                                 " exceeds the 1e-6 relative target; reduce dz");
    }
}

} // namespace

std::vector<MomentumDistribution> overlap_sweep(double p0, const PotentialConfig& config,
                                                const std::vector<double>& ks, const OverlapConfig& oc)
{
    const OverlapEngine engine(p0, config, oc);
    const auto res = engine.amplitudes(ks);
    std::vector<MomentumDistribution> out;
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        double worst = 0.0;
        check_errors(res, ik, oc.p_grid, worst);
        std::vector<double> dens(oc.p_grid.size());
        for (std::size_t ip = 0; ip < dens.size(); ++ip) dens[ip] = std::norm(res.amplitude[ik][ip]);
        auto meta = stationary_meta(p0, config, oc);
        meta["k"] = ks[ik];
        meta["max_error_estimate"] = worst;
        out.emplace_back(oc.p_grid, std::move(dens), NormConvention::Raw, std::move(meta));
    }
    return out;
}

MomentumDistribution overlap_spectrum(double p0, const PotentialConfig& config, double k, const OverlapConfig& oc)
{
    return overlap_sweep(p0, config, {k}, oc).front();
}

MomentumDistribution averaged_spectrum(double p0, const PotentialConfig& config, const OverlapConfig& oc)
{
    const auto nodes = recoil_nodes(oc.recoil, oc.k_nodes);
    std::vector<double> ks;
    for (const auto& n : nodes) ks.push_back(n.k);
    const OverlapEngine engine(p0, config, oc);
    const auto res = engine.amplitudes(ks);
    double worst_all = 0.0;
    std::vector<double> dens(oc.p_grid.size(), 0.0);
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        double worst = 0.0;
        check_errors(res, ik, oc.p_grid, worst);
        worst_all = std::max(worst_all, worst);
        for (std::size_t ip = 0; ip < dens.size(); ++ip) dens[ip] += nodes[ik].weight * std::norm(res.amplitude[ik][ip]);
    }
    auto meta = stationary_meta(p0, config, oc);
    meta["averaged"] = true;
    meta["max_error_estimate"] = worst_all;
    return MomentumDistribution::unit_integral(oc.p_grid, std::move(dens), std::move(meta));
}

ClassicalBoundaries classical_boundaries(double p0, const PotentialConfig& config, double k)
{
    if (!(p0 > 0)) throw DomainError("classical_boundaries: p0 must be > 0");
    return {lowest_final_momentum(p0, config.beta(), k), p0 - std::fabs(k), p0 + std::fabs(k)};
}

} // namespace ewi
