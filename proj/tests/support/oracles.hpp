#pragma once

// Independent reference computations for the test suites. Nothing here may
// call into the recurrence/defect-system code paths it is used to check.

#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "padefaber/detail/extended.hpp"
#include "padefaber/geometry.hpp"
#include "padefaber/simpade.hpp"

namespace oracles {

using padefaber::Complex;
using padefaber::Geometry;
using CL = std::complex<long double>;

// Psi'(w) straight from the Laurent data; independent of Geometry::psi_prime.
inline CL psi_prime_from_laurent(const Geometry& g, CL w) {
    const auto c = g.laurent();
    CL acc = CL(c[0]);
    CL wp = w * w;
    for (std::size_t k = 2; k < c.size(); ++k) {  // c[k] = c_{k-1}
        acc -= static_cast<long double>(k - 1) * CL(c[k]) / wp;
        wp *= w;
    }
    return acc;
}

// Power-basis coefficients of Phi_n via the contour-integral definition:
// the polynomial is evaluated by trapezoidal quadrature of
//
//   Phi_n(z) = (1/2pi) int w^{n+1} Psi'(w) / (Psi(w) - z) dtheta,  w = rho e^{i theta},
//
// at P points of a circle |z| = r inside the level domain, and the Taylor
// (= power-basis) coefficients are read off with a second DFT. The sampling
// circle is centered at the origin, so this oracle expects origin-centered
// geometries.
inline std::vector<Complex> faber_coeffs_by_contour(const Geometry& g, int n, double rho = 2.0,
                                                    int M = 4096, int P = 128) {
    if (P <= n) throw std::invalid_argument("faber_coeffs_by_contour: need P > n");
    constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    const long double rho_l = rho;

    // quadrature nodes on Gamma_rho
    std::vector<CL> wq(static_cast<std::size_t>(M)), tq(static_cast<std::size_t>(M)), dq(static_cast<std::size_t>(M));
    for (int s = 0; s < M; ++s) {
        const long double th = two_pi * s / M;
        wq[static_cast<std::size_t>(s)] = rho_l * CL(std::cos(th), std::sin(th));
        tq[static_cast<std::size_t>(s)] = g.psi_as<CL>(wq[static_cast<std::size_t>(s)]);
        dq[static_cast<std::size_t>(s)] = psi_prime_from_laurent(g, wq[static_cast<std::size_t>(s)]);
    }

    long double min_t = 1e30L;
    for (const auto& t : tq) min_t = std::min(min_t, std::abs(t));
    const long double r = 0.9L * min_t;

    std::vector<CL> num(static_cast<std::size_t>(M));  // w^{n+1} Psi'(w) per node
    for (int s = 0; s < M; ++s) {
        CL wp(1.0L);
        for (int k = 0; k <= n; ++k) wp *= wq[static_cast<std::size_t>(s)];
        num[static_cast<std::size_t>(s)] = wp * dq[static_cast<std::size_t>(s)];
    }

    auto eval = [&](CL z) {
        CL acc(0.0L);
        for (int s = 0; s < M; ++s) {
            acc += num[static_cast<std::size_t>(s)] / (tq[static_cast<std::size_t>(s)] - z);
        }
        return acc / static_cast<long double>(M);
    };

    std::vector<CL> f(static_cast<std::size_t>(P));
    for (int l = 0; l < P; ++l) {
        const long double th = two_pi * l / P;
        f[static_cast<std::size_t>(l)] = eval(r * CL(std::cos(th), std::sin(th)));
    }

    std::vector<Complex> coeffs(static_cast<std::size_t>(n) + 1);
    long double rk = 1.0L;
    for (int k = 0; k <= n; ++k) {
        CL acc(0.0L);
        for (int l = 0; l < P; ++l) {
            const long double th = two_pi * (static_cast<long double>(k) * l) / P;
            acc += f[static_cast<std::size_t>(l)] * CL(std::cos(th), -std::sin(th));
        }
        acc /= static_cast<long double>(P) * rk;
        coeffs[static_cast<std::size_t>(k)] = Complex(static_cast<double>(acc.real()),
                                                      static_cast<double>(acc.imag()));
        rk *= r;
    }
    return coeffs;
}

// Taylor coefficients about 0 of a principal-parts-plus-polynomial component,
// by the binomial series of (z - pole)^{-l}. Quad precision throughout.
inline std::vector<padefaber::detail::QuadComplex> taylor_coefficients(
    const padefaber::ComponentFunction& comp, int k_max) {
    using padefaber::detail::QuadComplex;
    std::vector<QuadComplex> f(static_cast<std::size_t>(k_max) + 1, QuadComplex{});
    for (int k = 0; k <= k_max && k <= comp.entire.degree(); ++k) {
        f[static_cast<std::size_t>(k)] += QuadComplex(comp.entire.coeff(k));
    }
    for (const auto& pp : comp.principal_parts) {
        const QuadComplex lam(pp.pole);
        for (int l = 1; l <= pp.order; ++l) {
            // (z-lam)^{-l} = (-1)^l lam^{-l} sum_k C(l-1+k, k) (z/lam)^k
            const QuadComplex c(pp.coefficients[static_cast<std::size_t>(l - 1)]);
            QuadComplex lam_pow = QuadComplex{1.0};
            for (int i = 0; i < l; ++i) lam_pow *= lam;
            __float128 binom = 1;
            QuadComplex zl = QuadComplex{1.0};
            for (int k = 0; k <= k_max; ++k) {
                QuadComplex term = c * QuadComplex{binom} * zl / lam_pow;
                if (l % 2 == 1) term = -term;
                f[static_cast<std::size_t>(k)] += term;
                binom = binom * (l + k) / (k + 1);
                zl = zl / lam;
            }
        }
    }
    return f;
}

// Classical Pade denominator from Taylor data: with q_0 = 1 fixed, solve
//
//   sum_{j=0}^{m} q_j f_{k-j} = 0,   k = n-m+1 .. n,
//
// by partial-pivot LU in quad precision. This is the scalar Toeplitz route
// the defect-system solution must reproduce on the unit disk.
inline padefaber::ComplexPolynomial pade_denominator_toeplitz(
    const std::vector<padefaber::detail::QuadComplex>& taylor, int n, int m) {
    using padefaber::detail::QuadComplex;
    if (n - m < 0) throw std::invalid_argument("pade_denominator_toeplitz: need n >= m");
    if (static_cast<int>(taylor.size()) <= n) throw std::invalid_argument("not enough Taylor coefficients");

    auto f = [&](int k) -> QuadComplex {
        if (k < 0) return QuadComplex{};
        return taylor[static_cast<std::size_t>(k)];
    };

    // A[r][c] multiplies q_{c+1}; rhs = -f_k
    std::vector<std::vector<QuadComplex>> A(static_cast<std::size_t>(m),
                                            std::vector<QuadComplex>(static_cast<std::size_t>(m)));
    std::vector<QuadComplex> rhs(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) {
        const int k = n - m + 1 + r;
        for (int c = 0; c < m; ++c) A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = f(k - (c + 1));
        rhs[static_cast<std::size_t>(r)] = -f(k);
    }

    // partial-pivot LU
    for (int col = 0; col < m; ++col) {
        int piv = col;
        __float128 best = padefaber::detail::abs1(A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)]);
        for (int r = col + 1; r < m; ++r) {
            const __float128 v = padefaber::detail::abs1(A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]);
            if (v > best) { best = v; piv = r; }
        }
        if (best == 0) throw std::runtime_error("pade_denominator_toeplitz: singular Toeplitz system");
        if (piv != col) {
            std::swap(A[static_cast<std::size_t>(piv)], A[static_cast<std::size_t>(col)]);
            std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(col)]);
        }
        for (int r = col + 1; r < m; ++r) {
            const QuadComplex factor = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] /
                                       A[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
            for (int c = col; c < m; ++c) {
                A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    factor * A[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
            }
            rhs[static_cast<std::size_t>(r)] -= factor * rhs[static_cast<std::size_t>(col)];
        }
    }
    std::vector<QuadComplex> q(static_cast<std::size_t>(m));
    for (int r = m - 1; r >= 0; --r) {
        QuadComplex acc = rhs[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < m; ++c) {
            acc -= A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] * q[static_cast<std::size_t>(c)];
        }
        q[static_cast<std::size_t>(r)] = acc / A[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    }

    std::vector<Complex> coeffs(static_cast<std::size_t>(m) + 1);
    coeffs[0] = Complex(1.0);
    for (int j = 1; j <= m; ++j) coeffs[static_cast<std::size_t>(j)] = q[static_cast<std::size_t>(j - 1)].to_double();
    return padefaber::ComplexPolynomial(coeffs);
}

}  // namespace oracles
