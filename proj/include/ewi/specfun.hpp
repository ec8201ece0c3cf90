#pragma once

// Modified Bessel function of the second kind with purely imaginary order,
// K_{i nu}(x), for real x > 0 where it is real-valued.
//
// Two representations are used:
//   x <  nu : ascending series K = -pi Im I_{i nu}(x) / sinh(pi nu), summed in
//             long double complex arithmetic.
//   x >= nu : double-exponential quadrature of the integral
//             int_0^inf exp(-x cosh t) cos(nu t) dt taken along its
//             steepest-descent contour t = s + i theta(s) with
//             sin theta(s) = nu s / (x sinh s), where the integrand is
//             positive and free of cancellation.
// Both return a (mantissa, log_scale) pair so that values far below the
// double range (K ~ exp(-pi nu / 2) for x << nu) stay representable.

#include <complex>

namespace ewi {

struct ScaledValue {
    double mantissa;
    double log_scale;

    /// mantissa * exp(log_scale); underflows to 0 when the scale is too small.
    double value() const;
};

/// ln Gamma(z) on the principal branch, Re z > 0.
std::complex<long double> log_gamma(std::complex<long double> z);

/// ln sinh(y) for y > 0 without overflow.
double log_sinh(double y);

/// K_{i nu}(x) with order constants precomputed; cheap to evaluate along a grid of x.
class ImagOrderBesselK {
public:
    /// Negative orders are folded: K_{-i nu} = K_{i nu}.
    explicit ImagOrderBesselK(double nu);

    double nu() const { return nu_; }

    ScaledValue scaled(double x) const;
    double operator()(double x) const { return scaled(x).value(); }

    /// ln Gamma(1 + i nu).
    std::complex<long double> log_gamma_1p() const { return lg_; }
    /// ln(pi) - Re ln Gamma(1 + i nu) - ln sinh(pi nu); the log prefactor of the series branch.
    long double series_log_prefactor() const { return series_log_pref_; }

private:
    ScaledValue series(double x) const;
    ScaledValue steepest_descent(double x) const;

    double nu_;
    std::complex<long double> lg_;
    long double series_log_pref_ = 0;
};

/// K_{i nu}(x). Throws DomainError for x <= 0 or non-finite input.
double besselk_imag(double nu, double x);

/// K_{i nu}(x) = mantissa * exp(log_scale) without intermediate under/overflow.
ScaledValue besselk_imag_scaled(double nu, double x);

/// ln of sqrt((4 p0 / (pi kappa)) sinh(pi p0 / kappa)), the normalization that makes
/// the asymptotic density of the stationary eigenfunctions independent of p0.
double log_stationary_norm(double nu, double p0, double kappa);

/// exp(log_stationary_norm(...)); throws NumericalError if it overflows a double.
double stationary_norm(double nu, double p0, double kappa);

} // namespace ewi
