#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "ewi/analysis.hpp"
#include "ewi/semiclassical.hpp"
#include "ewi/stationary.hpp"

using namespace ewi;

namespace {

const PotentialConfig kFig3(1000.0, 0.125, 0.2);

// Coarser p grid for the unit tests; the acceptance binary uses the default 600 points.
OverlapConfig test_config(int n_p = 200, RecoilModel recoil = {}, int k_nodes = 41)
{
    auto oc = OverlapConfig::defaults(2.0, kFig3, recoil, k_nodes);
    oc.p_grid = default_momentum_grid(2.0, 0.2, 1.0, n_p);
    return oc;
}

// phi_k(p) by fixed 30-point Gauss-Legendre panels of width 1 up to z = 400, with no
// tail model: independent of the trapezoid sum and its closed-form tail.
std::complex<double> oracle_amplitude(double p0, const PotentialConfig& c, double p, double k, double z_lo)
{
    const StationaryState s1{p0, c.v1(), c.kappa()}, s2{p, c.v2(), c.kappa()};
    std::complex<double> acc = 0;
    for (double a = z_lo; a < 400.0; a += 1.0) {
        auto re = [&](double z) { return eigenfunction(s1, z) * eigenfunction(s2, z) * std::exp(-c.kappa() * z) * std::cos(k * z); };
        auto im = [&](double z) { return -eigenfunction(s1, z) * eigenfunction(s2, z) * std::exp(-c.kappa() * z) * std::sin(k * z); };
        acc += std::complex<double>(boost::math::quadrature::gauss<double, 30>::integrate(re, a, a + 1.0),
                                    boost::math::quadrature::gauss<double, 30>::integrate(im, a, a + 1.0));
    }
    return acc;
}

} // namespace

TEST_CASE("eigenfunction shape")
{
    const StationaryState s{2.0, 1000.0, 0.125};
    // Monotone decay into the barrier.
    double prev = std::fabs(eigenfunction(s, 10.0));
    for (double z = 9.0; z > -6.0; z -= 0.5) {
        const double v = std::fabs(eigenfunction(s, z));
        CHECK(v < prev);
        prev = v;
    }
    CHECK(eigenfunction(s, -40.0) < 1e-100);
    // Asymptotic standing wave 2 cos(p z + delta): zeros pi / p apart, amplitude 2.
    std::vector<double> zeros;
    double z = 150.0, f = eigenfunction(s, z);
    double amp = 0;
    while (z < 160.0) {
        const double z2 = z + 0.01, f2 = eigenfunction(s, z2);
        amp = std::max(amp, std::fabs(f2));
        if (f * f2 < 0) zeros.push_back(z - f * 0.01 / (f2 - f));
        z = z2;
        f = f2;
    }
    REQUIRE(zeros.size() >= 4);
    for (std::size_t i = 1; i < zeros.size(); ++i)
        CHECK(zeros[i] - zeros[i - 1] == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-4));
    CHECK(amp == doctest::Approx(2.0).epsilon(1e-3));
    // Same asymptotic amplitude for another momentum.
    const StationaryState s3{0.7, 1000.0, 0.125};
    double amp3 = 0;
    for (double zz = 250.0; zz < 260.0; zz += 0.005) amp3 = std::max(amp3, std::fabs(eigenfunction(s3, zz)));
    CHECK(amp3 == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("overlap amplitudes against panel quadrature")
{
    auto oc = test_config();
    oc.p_grid = {1.1, 1.45, 1.83, 2.4};
    const OverlapEngine engine(2.0, kFig3, oc);
    const auto res = engine.amplitudes({0.0, 0.6});
    double scale = 0;
    for (const auto& row : res.amplitude)
        for (const auto& a : row) scale = std::max(scale, std::abs(a));
    for (std::size_t ik = 0; ik < 2; ++ik)
        for (std::size_t ip = 0; ip < oc.p_grid.size(); ++ip) {
            const auto ref = oracle_amplitude(2.0, kFig3, oc.p_grid[ip], res.k[ik], oc.z_min);
            CAPTURE(oc.p_grid[ip]);
            CAPTURE(res.k[ik]);
            CHECK(std::abs(res.amplitude[ik][ip] - ref) < 1e-7 * scale);
        }
}

TEST_CASE("recoil sign symmetry")
{
    const auto oc = test_config();
    const auto sweep = overlap_sweep(2.0, kFig3, {0.35, -0.35, 1.0, -1.0}, oc);
    for (int pair = 0; pair < 2; ++pair) {
        const auto& a = sweep[2 * pair].density();
        const auto& b = sweep[2 * pair + 1].density();
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-10 * std::max(a[i], 1e-300));
    }
}

TEST_CASE("classical boundaries")
{
    const auto b0 = classical_boundaries(2.0, kFig3, 0.0);
    CHECK(b0.p_min == doctest::Approx(0.894427191).epsilon(1e-9));
    CHECK(b0.p_line_lo == 2.0);
    CHECK(b0.p_line_hi == 2.0);
    const auto b1 = classical_boundaries(2.0, kFig3, 1.0);
    CHECK(b1.p_min == doctest::Approx(0.7416198487).epsilon(1e-9));
    CHECK(b1.p_line_lo == 1.0);
    CHECK(b1.p_line_hi == 3.0);
    CHECK(classical_boundaries(2.0, kFig3, -0.4).p_min == classical_boundaries(2.0, kFig3, 0.4).p_min);
    CHECK_THROWS_AS(classical_boundaries(1.0, kFig3, 0.95), DomainError);
}

TEST_CASE("spectrum support and forbidden region")
{
    const auto oc = test_config(300);
    const std::vector<double> ks{0.0, 0.5, 1.0};
    const auto sweep = overlap_sweep(2.0, kFig3, ks, oc);
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        const auto d = sweep[ik].normalized();
        const auto b = classical_boundaries(2.0, kFig3, ks[ik]);
        const double kap = kFig3.kappa();
        std::vector<double> inside(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double p = d.p()[i];
            inside[i] = (p >= b.p_min - 3 * kap && p <= b.p_line_hi + 3 * kap) ? d.density()[i] : 0.0;
        }
        CAPTURE(ks[ik]);
        CHECK(trapezoid(d.p(), inside) >= 0.99);
        // Deep in the forbidden region above p0 + |k|: the tail falls about a decade per 0.1 in p.
        for (std::size_t i = 0; i < d.size(); ++i)
            if (d.p()[i] >= b.p_line_hi + 5 * kap) CHECK(d.density()[i] <= 1e-6 * d.peak());
    }
    // Far above p0 + |k|.
    auto oc3 = test_config();
    oc3.p_grid = {2.95, 3.0};
    const auto at3 = overlap_sweep(2.0, kFig3, {0.0, 0.5}, oc3);
    CHECK(at3[0].density()[1] <= 1e-6 * sweep[0].peak());
    CHECK(at3[1].density()[1] <= 1e-6 * sweep[1].peak());
    // Peak near the lower classical limit at k = 0.
    const auto& d0 = sweep[0];
    const auto imax = std::max_element(d0.density().begin(), d0.density().end()) - d0.density().begin();
    CHECK(d0.p()[imax] < 1.2);
    CHECK(d0.p()[imax] > 0.85);
}

TEST_CASE("window robustness")
{
    auto oc = test_config(150);
    const auto base = overlap_spectrum(2.0, kFig3, 0.5, oc).normalized();
    const double width = oc.z_max - oc.z_min;
    oc.z_min -= 0.25 * width;
    oc.z_max += 0.25 * width;
    const auto wide = overlap_spectrum(2.0, kFig3, 0.5, oc).normalized();
    double diff = 0;
    for (std::size_t i = 0; i < base.size(); ++i) diff = std::max(diff, std::fabs(base.density()[i] - wide.density()[i]));
    CHECK(diff < 1e-5 * base.peak());
}

TEST_CASE("window violations are all reported")
{
    auto oc = test_config(50);
    CHECK(oc.violations(2.0, kFig3).empty());
    oc.z_min += 20.0;
    oc.z_max -= 30.0;
    oc.dz *= 2.0;
    oc.k_nodes = 4;
    CHECK(oc.violations(2.0, kFig3).size() == 1); // k_nodes short-circuits the window checks
    oc.k_nodes = 5;
    CHECK(oc.violations(2.0, kFig3).size() == 3);
    CHECK_THROWS_AS(OverlapEngine(2.0, kFig3, oc), DomainError);
}

TEST_CASE("recoil averaging")
{
    // kind = None is the k = 0 spectrum, renormalized.
    const auto none = averaged_spectrum(2.0, kFig3, test_config(200, {RecoilKind::None, 1.0}));
    const auto k0 = overlap_spectrum(2.0, kFig3, 0.0, test_config(200)).normalized();
    for (std::size_t i = 0; i < none.size(); ++i)
        CHECK(none.density()[i] == doctest::Approx(k0.density()[i]).epsilon(1e-12));

    // Doubling the default node count. The edges p = p0 +- k are a few kappa wide in k, which 21
    // nodes do not resolve; the default of 41 does.
    const auto a21 = averaged_spectrum(2.0, kFig3, test_config(200, {}, 21));
    const auto a41 = averaged_spectrum(2.0, kFig3, test_config(200, {}, 41));
    const auto a81 = averaged_spectrum(2.0, kFig3, test_config(200, {}, 81));
    double coarse = 0, diff = 0;
    for (std::size_t i = 0; i < a21.size(); ++i) {
        coarse = std::max(coarse, std::fabs(a21.density()[i] - a41.density()[i]));
        diff = std::max(diff, std::fabs(a41.density()[i] - a81.density()[i]));
    }
    CHECK(diff < 1e-4);
    CHECK(diff < coarse);
    CHECK(a41.integral() == doctest::Approx(1.0).epsilon(1e-12));

    // Fringes survive at nearly the same momenta.
    const Region r = default_region(2.0, kFig3);
    const auto fa = extract_fringes(a41, r.lo, r.hi);
    const auto f0 = extract_fringes(k0, r.lo, r.hi);
    CHECK(fa.minima.size() >= 3);
    const auto cmp = compare_routes(k0, a41, &r);
    CHECK(cmp.matched >= 3);
    CHECK(cmp.minima_shift < 0.5 * f0.mean_spacing);
}

TEST_CASE("k = 0 fringe count matches the semiclassical prediction")
{
    const auto d = overlap_spectrum(2.0, kFig3, 0.0, test_config(400)).normalized();
    const Region r = default_region(2.0, kFig3);
    const auto f = extract_fringes(d, r.lo, r.hi);
    const auto predicted = predicted_fringe_momenta(2.0, kFig3);
    CHECK(std::abs(static_cast<long>(f.minima.size()) - static_cast<long>(predicted.size())) <= 1);
}

TEST_CASE("parallel sweep is deterministic")
{
    const auto oc = test_config(120);
    const auto a = overlap_sweep(2.0, kFig3, {0.0, 0.7}, oc);
    const auto b = overlap_sweep(2.0, kFig3, {0.0, 0.7}, oc);
    for (int ik = 0; ik < 2; ++ik) CHECK(a[ik].density() == b[ik].density());
}
