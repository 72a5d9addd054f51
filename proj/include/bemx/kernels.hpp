// Fundamental solution of -Delta - lambda^2 in R^3 and its directional derivatives.
#pragma once

#include <cmath>
#include <numbers>

#include "bemx/common.hpp"

namespace bemx {

inline constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Wavenumber lambda with Im(lambda) >= 0. lambda = 0 selects the Laplace kernel.
/// For nonzero lambda the library assumes lambda^2 avoids the interior Laplace
/// eigenvalues; this is not machine-checkable and is surfaced instead through the
/// solver's condition estimate.
struct WaveNumber {
    Complex value{0.0, 0.0};

    WaveNumber() = default;
    explicit WaveNumber(Complex v) : value(v) {
        if (v.imag() < 0.0)
            throw ValidationError("wavenumber: Im(lambda) must be >= 0");
    }
    static WaveNumber laplace() { return WaveNumber{}; }

    bool is_laplace() const { return value == Complex(0.0, 0.0); }
};

inline constexpr double kCoincidentTol = 1e-14;

namespace detail {
inline double checked_distance(const Vec3& x, const Vec3& y) {
    const double r = (x - y).norm();
    if (r <= kCoincidentTol)
        throw NumericalError("kernel evaluated at coincident points (r <= 1e-14)");
    return r;
}
}  // namespace detail

/// Phi(x,y): 1/(4 pi r) for lambda = 0, e^{i lambda r}/(4 pi r) otherwise.
inline Complex phi(const WaveNumber& lambda, const Vec3& x, const Vec3& y) {
    const double r = detail::checked_distance(x, y);
    if (lambda.is_laplace()) return Complex(1.0 / (kFourPi * r), 0.0);
    return std::exp(Complex(0.0, 1.0) * lambda.value * r) / (kFourPi * r);
}

/// grad_x Phi(x,y) = e^{i lambda r} (i lambda r - 1) (x - y) / (4 pi r^3).
inline Eigen::Vector3cd grad_x_phi(const WaveNumber& lambda, const Vec3& x, const Vec3& y) {
    const double r = detail::checked_distance(x, y);
    const Vec3 d = x - y;
    Complex factor;
    if (lambda.is_laplace()) {
        factor = Complex(-1.0 / (kFourPi * r * r * r), 0.0);
    } else {
        const Complex ilr = Complex(0.0, 1.0) * lambda.value * r;
        factor = std::exp(ilr) * (ilr - 1.0) / (kFourPi * r * r * r);
    }
    return factor * d.cast<Complex>();
}

/// d Phi / d n_y = grad_y Phi . n_y = e^{i lambda r} (1 - i lambda r) ((x-y).n_y) / (4 pi r^3).
inline Complex dphi_dny(const WaveNumber& lambda, const Vec3& x, const Vec3& y,
                        const Vec3& n_y) {
    const Eigen::Vector3cd g = grad_x_phi(lambda, x, y);
    return -(g(0) * n_y(0) + g(1) * n_y(1) + g(2) * n_y(2));
}

/// d Phi / d n_x; antisymmetric to dphi_dny for the same direction vector.
inline Complex dphi_dnx(const WaveNumber& lambda, const Vec3& x, const Vec3& y,
                        const Vec3& n_x) {
    const Eigen::Vector3cd g = grad_x_phi(lambda, x, y);
    return g(0) * n_x(0) + g(1) * n_x(1) + g(2) * n_x(2);
}

/// grad_x of the double layer kernel dPhi/dn_y. Writing dPhi/dn_y = f(r) s with
/// s = (x-y).n_y, f(r) = e^{i lambda r}(1 - i lambda r)/(4 pi r^3):
///   grad_x = f'(r) s (x-y)/r + f(r) n_y,
///   f'(r)  = e^{i lambda r} (lambda^2 r^2 - 3 (1 - i lambda r)) / (4 pi r^4).
inline Eigen::Vector3cd grad_x_dphi_dny(const WaveNumber& lambda, const Vec3& x,
                                        const Vec3& y, const Vec3& n_y) {
    const double r = detail::checked_distance(x, y);
    const Vec3 d = x - y;
    const double s = d.dot(n_y);
    const Complex lam = lambda.value;
    const Complex eilr = lambda.is_laplace()
                             ? Complex(1.0, 0.0)
                             : std::exp(Complex(0.0, 1.0) * lam * r);
    const Complex one_m_ilr = 1.0 - Complex(0.0, 1.0) * lam * r;
    const Complex f = eilr * one_m_ilr / (kFourPi * r * r * r);
    const Complex fp = eilr * (lam * lam * r * r - 3.0 * one_m_ilr) / (kFourPi * r * r * r * r);
    return (fp * s / r) * d.cast<Complex>() + f * n_y.cast<Complex>();
}

}  // namespace bemx
