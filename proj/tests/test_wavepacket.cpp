#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ewi/analysis.hpp"
#include "ewi/fft.hpp"
#include "ewi/parallel.hpp"
#include "ewi/wavepacket.hpp"

using namespace ewi;

namespace {

const PotentialConfig kFig3(1000.0, 0.125, 0.2);

WavePacketSpec free_packet(double z0, double sigma, double k_z, double z_lo, double z_hi, std::size_t n)
{
    WavePacketSpec s;
    s.z0 = z0;
    s.sigma_z = sigma;
    s.k_z = k_z;
    s.grid = {z_lo, z_hi, n};
    return s;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

// Cheap run: few tau and k nodes, coarse output grid.
WavePacketOptions cheap_options()
{
    WavePacketOptions o;
    o.tau_nodes = 12;
    o.k_nodes = 3;
    o.p_grid = default_momentum_grid(2.0, 0.2, 1.0, 200);
    return o;
}

} // namespace

TEST_CASE("initial state")
{
    for (double sigma : {2.5, 5.0, 10.0}) {
        const auto spec = WavePacketSpec::make(2.0, sigma, kFig3, 70.0);
        CHECK(spec.violations(kFig3).empty());
        const auto psi = spec.initial_state();
        CHECK(std::fabs(norm(psi, spec.grid) - 1.0) < 1e-12);
        CHECK(position_variance(psi, spec.grid) == doctest::Approx(sigma * sigma).epsilon(1e-3));
        CHECK(mean_position(psi, spec.grid) == doctest::Approx(spec.z0).epsilon(1e-6));
        CHECK(spec.sigma_p() == 1.0 / sigma);
        // Nothing starts inside the wall.
        CHECK(spec.floor_z < spec.z0 - 5.0 * sigma);
    }
}

TEST_CASE("spec validation")
{
    auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    auto bad = spec;
    bad.grid.n = 1000;
    CHECK(!bad.violations(kFig3).empty());
    bad = spec;
    bad.grid.n = 256; // Nyquist too low
    CHECK(!bad.violations(kFig3).empty());
    bad = spec;
    bad.k_z = 1.0;
    CHECK(!bad.violations(kFig3).empty());
    bad = spec;
    bad.z0 = spec.grid.z_hi - 2.0;
    CHECK(!bad.violations(kFig3).empty());
    CHECK_THROWS_AS(WavePacketSpec::make(2.0, 5.0, kFig3, 70.0, 1.5), DomainError);
    CHECK_THROWS_AS(jump_schedule(bad, kFig3, 70.0), DomainError);
}

TEST_CASE("free dispersion matches the analytic width")
{
    const double sigma = 2.0, t = 70.0;
    const auto spec = free_packet(0.0, sigma, -2.0, -400.0, 400.0, 8192);
    const auto psi = spec.initial_state();
    const double var0 = position_variance(psi, spec.grid);
    const auto out = propagate(psi, spec.grid, 0.0, kFig3, t, 0.05, {10.0, 1e-8});
    const double expected = var0 + std::pow(t / (2.0 * sigma), 2);
    CHECK(std::fabs(std::sqrt(position_variance(out, spec.grid)) / std::sqrt(expected) - 1.0) < 1e-6);
    CHECK(mean_position(out, spec.grid) == doctest::Approx(-2.0 * t).epsilon(1e-9));
    CHECK(std::fabs(norm(out, spec.grid) - 1.0) < 1e-10);
}

TEST_CASE("elastic bounce: norm and momentum reversal")
{
    // Longer run than the interferometer so the packet is far out of the field.
    const auto spec = WavePacketSpec::make(2.0, 10.0, kFig3, 140.0, 0.25);
    const SplitOperator op(spec.grid, kFig3.v1(), kFig3.kappa());
    Wave psi = spec.initial_state();
    const double p_in = mean_momentum(psi, spec.grid, op.fft());
    const auto stats = op.advance(psi, 140.0, default_time_step(spec, {}), {50.0, 1e-8});
    CHECK(stats.steps == static_cast<std::size_t>(std::ceil(140.0 / default_time_step(spec, {}))));
    CHECK(std::fabs(norm(psi, spec.grid) - 1.0) < 1e-10);
    const double p_out = mean_momentum(psi, spec.grid, op.fft());
    CHECK(p_in == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(std::fabs(p_out + p_in) < 1e-4 * std::fabs(p_in));
}

TEST_CASE("momentum marginal is constant in free flight")
{
    // A packet receding from the mirror far outside the field.
    const auto spec = free_packet(250.0, 5.0, 2.0, 150.0, 450.0, 4096);
    const auto p = default_momentum_grid(2.0, 0.2, 1.0, 300);
    const auto psi = spec.initial_state();
    const auto before = momentum_density(psi, spec.grid, p);
    const auto after = momentum_density(propagate(psi, spec.grid, kFig3.v1(), kFig3, 40.0, 0.02, {25.0, 1e-8}), spec.grid, p);
    CHECK(sup_diff(before, after) < 1e-8);
    // Momentum density integrates to the norm.
    const auto wide = default_momentum_grid(2.0, 0.2, 1.0, 2000);
    CHECK(trapezoid(wide, momentum_density(psi, spec.grid, wide)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("transfer rate")
{
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    const auto far = free_packet(300.0, 5.0, -2.0, 150.0, 450.0, 4096);
    CHECK(transfer_rate(far.initial_state(), far.grid, kFig3) < 1e-12 * kFig3.v1());
    CHECK(transfer_rate(spec.initial_state(), spec.grid, kFig3) >= 0.0);
}

TEST_CASE("quantum jump")
{
    const double sigma = 5.0;
    const auto spec = free_packet(250.0, sigma, -2.0, 100.0, 400.0, 4096);
    const auto psi = spec.initial_state();
    const Fft fft(spec.grid.n);
    for (double k : {0.0, 0.4, -1.0}) {
        const auto out = apply_jump(psi, spec.grid, kFig3, k);
        CHECK(std::fabs(norm(out, spec.grid) - 1.0) < 1e-12);
        // A real envelope cannot move the mean momentum: the kick is exactly -k.
        CHECK(mean_momentum(out, spec.grid, fft) == doctest::Approx(-2.0 - k).epsilon(1e-9));
        // Overlap with the kicked input.
        std::complex<double> ov = 0;
        for (std::size_t j = 0; j < spec.grid.n; ++j) {
            const double z = spec.grid.z(j);
            ov += std::conj(out[j]) * psi[j] * std::polar(1.0, -k * z);
        }
        ov *= spec.grid.dz();
        CHECK(std::abs(ov) > 1.0 - kFig3.kappa() * kFig3.kappa() * sigma * sigma);
    }
    // Deep below the grid's reach the jump has nothing to act on.
    Wave zero(spec.grid.n, 0.0);
    CHECK_THROWS_AS(apply_jump(zero, spec.grid, kFig3, 0.0), NumericalError);
}

TEST_CASE("edge monitor")
{
    const auto spec = free_packet(0.0, 2.0, -2.0, -60.0, 60.0, 1024);
    CHECK_THROWS_AS(propagate(spec.initial_state(), spec.grid, 0.0, kFig3, 40.0, 0.05, {10.0, 1e-8}), NumericalError);
    CHECK_NOTHROW(propagate(spec.initial_state(), spec.grid, 0.0, kFig3, 5.0, 0.05, {10.0, 1e-8}));
}

TEST_CASE("jump schedule")
{
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    WavePacketOptions o;
    o.tau_nodes = 16;
    const auto js = jump_schedule(spec, kFig3, 70.0, o);
    REQUIRE(js.tau_nodes.size() == 16);
    const double g_max = *std::max_element(js.trace_gamma.begin(), js.trace_gamma.end());
    for (double g : js.trace_gamma) CHECK(g >= 0.0);
    for (std::size_t i = 0; i < js.tau_nodes.size(); ++i) {
        CHECK(js.tau_nodes[i] >= 0.0);
        CHECK(js.tau_nodes[i] <= 70.0);
        if (i) CHECK(js.tau_nodes[i] > js.tau_nodes[i - 1]);
        CHECK(js.gamma[i] >= 0.0);
    }
    // The packet starts and ends outside the field.
    CHECK(js.trace_gamma.front() < 1e-4 * g_max);
    CHECK(js.gamma_end_ratio < 1e-4);
    CHECK(js.gamma_end_ratio == doctest::Approx(js.trace_gamma.back() / g_max));
}

TEST_CASE("rate peak approaches the classical bounce as the packet narrows in momentum")
{
    // |argmax Gamma - argmin <z>| shrinks with sigma_p and is within one step in the
    // near-classical limit. Long runs give room for wide packets.
    auto offset = [](double sigma, double t_end, double& dt) {
        const auto spec = WavePacketSpec::make(2.0, sigma, kFig3, t_end);
        WavePacketOptions o;
        o.tau_nodes = 1;
        const auto js = jump_schedule(spec, kFig3, t_end, o);
        dt = js.trace_t[1] - js.trace_t[0];
        const auto g = std::max_element(js.trace_gamma.begin(), js.trace_gamma.end()) - js.trace_gamma.begin();
        const auto z = std::min_element(js.trace_mean_z.begin(), js.trace_mean_z.end()) - js.trace_mean_z.begin();
        return std::fabs(js.trace_t[g] - js.trace_t[z]);
    };
    double dt5 = 0, dt10 = 0, dt30 = 0;
    const double d5 = offset(5.0, 70.0, dt5);
    const double d10 = offset(10.0, 70.0, dt10);
    const double d30 = offset(30.0, 240.0, dt30);
    CHECK(d10 < d5);
    CHECK(d30 < d10);
    CHECK(d30 <= dt30 * (1 + 1e-9));
}

TEST_CASE("spectrum is an incoherent, order-independent sum")
{
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    auto o = cheap_options();
    o.tau_nodes = 6;
    const RecoilModel recoil{RecoilKind::Isotropic, 1.0};
    const auto js = jump_schedule(spec, kFig3, 70.0, o);
    const auto d = final_spectrum(spec, kFig3, js, recoil, 70.0, o);
    CHECK(d.integral() == doctest::Approx(1.0).epsilon(1e-12));

    // The same sum by hand, over the branches in reverse order.
    const double dt = default_time_step(spec, o);
    const SplitOperator op1(spec.grid, kFig3.v1(), kFig3.kappa());
    const SplitOperator op2(spec.grid, kFig3.v2(), kFig3.kappa());
    std::vector<Wave> snaps;
    Wave psi = spec.initial_state();
    double t = 0;
    for (double tau : js.tau_nodes) {
        op1.advance(psi, tau - t, dt);
        t = tau;
        snaps.push_back(psi);
    }
    const auto nodes = recoil_nodes(recoil, o.k_nodes);
    std::vector<double> sum(o.p_grid.size(), 0.0);
    for (std::size_t i = js.tau_nodes.size(); i-- > 0;)
        for (std::size_t q = nodes.size(); q-- > 0;) {
            Wave b = apply_jump(snaps[i], spec.grid, kFig3, nodes[q].k);
            op2.advance(b, 70.0 - js.tau_nodes[i], dt);
            const auto dens = momentum_density(b, spec.grid, o.p_grid);
            const double w = js.weights[i] * js.gamma[i] * nodes[q].weight;
            for (std::size_t ip = 0; ip < sum.size(); ++ip) sum[ip] += w * dens[ip];
        }
    const auto manual = MomentumDistribution::unit_integral(o.p_grid, sum);
    CHECK(sup_diff(manual.density(), d.density()) <= 1e-12 * d.peak());

    // Bitwise identical across worker counts.
    set_worker_count(1);
    const auto serial = final_spectrum(spec, kFig3, js, recoil, 70.0, o);
    set_worker_count(3);
    const auto threaded = final_spectrum(spec, kFig3, js, recoil, 70.0, o);
    set_worker_count(0);
    CHECK(serial.density() == threaded.density());
    CHECK(serial.meta()["diagnostics"]["residual_energy_ratio"] < o.residual_energy_tol);
}

TEST_CASE("a jump far from the mirror gives one elastic hump without fringes")
{
    // Only the incoming path exists, so there is nothing to interfere with; energy is
    // conserved on the weak field and the packet leaves with p close to p0.
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    const double tau = 5.0;
    const double dt = default_time_step(spec, {});
    Wave psi = propagate(spec.initial_state(), spec.grid, kFig3.v1(), kFig3, tau, dt);
    CHECK(transfer_rate(psi, spec.grid, kFig3) < 1e-6 * kFig3.v1());
    psi = apply_jump(psi, spec.grid, kFig3, 0.0);
    psi = propagate(psi, spec.grid, kFig3.v2(), kFig3, 70.0 - tau, dt);
    const auto p = default_momentum_grid(2.0, 0.2, 1.0, 400);
    const auto d = MomentumDistribution::unit_integral(p, momentum_density(psi, spec.grid, p));
    const auto imax = std::max_element(d.density().begin(), d.density().end()) - d.density().begin();
    CHECK(std::fabs(d.p()[imax] - 2.0) < 3.0 * spec.sigma_p());
    const Region r = default_region(2.0, kFig3);
    CHECK(extract_fringes(d, r.lo, r.hi).minima.empty());
}

TEST_CASE("a single jump at the rate peak already interferes")
{
    // At the peak the packet straddles the turning point, so one jump time holds both
    // transfer points; the fringes sit where the stationary route puts them.
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    const auto js = jump_schedule(spec, kFig3, 70.0, {});
    const auto g = std::max_element(js.trace_gamma.begin(), js.trace_gamma.end()) - js.trace_gamma.begin();
    const double tau = js.trace_t[g];
    const double dt = default_time_step(spec, {});
    Wave psi = propagate(spec.initial_state(), spec.grid, kFig3.v1(), kFig3, tau, dt);
    psi = apply_jump(psi, spec.grid, kFig3, 0.0);
    psi = propagate(psi, spec.grid, kFig3.v2(), kFig3, 70.0 - tau, dt);
    const auto p = default_momentum_grid(2.0, 0.2, 1.0, 400);
    const auto d = MomentumDistribution::unit_integral(p, momentum_density(psi, spec.grid, p));
    const Region r = default_region(2.0, kFig3);
    const auto f = extract_fringes(d, r.lo, r.hi);
    CHECK(f.minima.size() >= 3);
    CHECK(f.visibility > 0.5);
}

TEST_CASE("sampled estimator is reproducible and tracks the quadrature")
{
    const auto spec = WavePacketSpec::make(2.0, 5.0, kFig3, 70.0);
    const RecoilModel recoil{RecoilKind::Isotropic, 1.0};
    const auto o = cheap_options();
    const auto a = sampled_spectrum(spec, kFig3, recoil, 70.0, 96, 7, o);
    const auto b = sampled_spectrum(spec, kFig3, recoil, 70.0, 96, 7, o);
    CHECK(a.density() == b.density());
    CHECK(a.meta()["seed"] == 7);
    const auto c = sampled_spectrum(spec, kFig3, recoil, 70.0, 96, 8, o);
    CHECK(a.density() != c.density());
    const auto q = final_spectrum(spec, kFig3, recoil, 70.0, o);
    CHECK(compare_routes(q, a).l1 < 0.3);
}
