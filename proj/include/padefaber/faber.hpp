#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "padefaber/complex_polynomial.hpp"
#include "padefaber/geometry.hpp"

namespace padefaber {

// Faber polynomials of E as explicit power-basis polynomials, polys[n] = Phi_n.
struct FaberBasis {
    Geometry geometry;
    std::vector<ComplexPolynomial> polys;

    int max_degree() const { return static_cast<int>(polys.size()) - 1; }
};

// Recurrence on coefficient vectors, driven by the Laurent data of Psi:
//
//   Phi_0 = 1,
//   Phi_{n+1} = ( z Phi_n - sum_{k=0}^{n} c_k Phi_{n-k} - n c_n ) / c_{-1}.
//
// Coefficient arithmetic runs in long double; for segment/ellipse kinds the
// coefficients grow geometrically and the extra guard digits are cheap.
inline FaberBasis faber_basis(const Geometry& g, int n_max) {
    if (n_max < 0) throw std::invalid_argument("faber_basis: n_max must be >= 0");
    using CL = std::complex<long double>;

    const long double lead = static_cast<long double>(g.capacity());
    const int tail_len = g.laurent_tail_length();
    std::vector<CL> tail(static_cast<std::size_t>(tail_len));
    for (int k = 0; k < tail_len; ++k) tail[static_cast<std::size_t>(k)] = CL(g.laurent_c(k));

    std::vector<std::vector<CL>> polys;
    polys.reserve(static_cast<std::size_t>(n_max) + 1);
    polys.push_back({CL(1.0L)});

    for (int n = 0; n < n_max; ++n) {
        std::vector<CL> next(static_cast<std::size_t>(n) + 2, CL(0.0L));
        const auto& cur = polys.back();
        for (std::size_t k = 0; k < cur.size(); ++k) next[k + 1] = cur[k];  // z * Phi_n
        for (int k = 0; k <= n && k < tail_len; ++k) {
            const CL ck = tail[static_cast<std::size_t>(k)];
            if (ck == CL(0.0L)) continue;
            const auto& lower = polys[static_cast<std::size_t>(n - k)];
            for (std::size_t j = 0; j < lower.size(); ++j) next[j] -= ck * lower[j];
        }
        if (n < tail_len) next[0] -= static_cast<long double>(n) * tail[static_cast<std::size_t>(n)];
        for (auto& v : next) v /= lead;
        polys.push_back(std::move(next));
    }

    FaberBasis basis{g, {}};
    basis.polys.reserve(polys.size());
    for (const auto& p : polys) {
        std::vector<Complex> c(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
            c[k] = Complex(static_cast<double>(p[k].real()), static_cast<double>(p[k].imag()));
        }
        basis.polys.emplace_back(std::move(c));
    }
    return basis;
}

// (Phi_0(z), ..., Phi_{n_max}(z)) by the value recurrence, in the caller's
// precision. For |Phi(z)| > 1 the recurrence follows the dominant solution,
// so forward evaluation is stable; this is the preferred way to evaluate
// high-degree Faber polynomials, where power-basis coefficients would lose
// accuracy to cancellation.
template <class Real>
inline std::vector<std::complex<Real>> faber_values(const Geometry& g, int n_max, std::complex<Real> z) {
    using C = std::complex<Real>;
    const Real lead = static_cast<Real>(g.capacity());
    const int tail_len = g.laurent_tail_length();
    std::vector<C> tail(static_cast<std::size_t>(tail_len));
    for (int k = 0; k < tail_len; ++k) tail[static_cast<std::size_t>(k)] = C(g.laurent_c(k));

    std::vector<C> vals(static_cast<std::size_t>(n_max) + 1);
    vals[0] = C(Real(1));
    for (int n = 0; n < n_max; ++n) {
        C acc = z * vals[static_cast<std::size_t>(n)];
        for (int k = 0; k <= n && k < tail_len; ++k) {
            acc -= tail[static_cast<std::size_t>(k)] * vals[static_cast<std::size_t>(n - k)];
        }
        if (n < tail_len) acc -= C(Real(n)) * tail[static_cast<std::size_t>(n)];
        vals[static_cast<std::size_t>(n) + 1] = acc / lead;
    }
    return vals;
}

struct FaberCoefficients {
    std::vector<Complex> values;  // values[n] = [G]_n
    double rho_used{0.0};
    int N_used{0};
};

namespace detail {

// Trapezoidal contour quadrature of the Faber coefficient integral after the
// substitution t = Psi(rho e^{i theta}):
//
//   [G]_n = rho^{-n} (1/N) sum_s G(Psi(rho e^{i theta_s})) e^{-i n theta_s}.
//
// Nodes, twiddles and the accumulation run in long double; only the samples
// carry the precision of the supplied function.
template <class Real, class Sampler>
std::vector<Complex> faber_coefficients_impl(const Sampler& sample_at, const Geometry& g, int n_max,
                                             double rho, int N) {
    if (!(rho > 1.0)) throw std::invalid_argument("faber_coefficients: rho must be > 1");
    if (n_max < 0) throw std::invalid_argument("faber_coefficients: n_max must be >= 0");
    if (N < 2 * (n_max + 1)) {
        std::ostringstream os;
        os << "faber_coefficients: N = " << N << " is below the anti-aliasing bound 2*(n_max+1) = "
           << 2 * (n_max + 1);
        throw std::invalid_argument(os.str());
    }

    using CL = std::complex<long double>;
    constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    const long double rho_l = static_cast<long double>(rho);

    std::vector<CL> samples(static_cast<std::size_t>(N));
    for (int s = 0; s < N; ++s) {
        const long double th = two_pi * s / N;
        const CL w = rho_l * CL(std::cos(th), std::sin(th));
        const CL t = g.psi_as<CL>(w);
        const std::complex<Real> v = sample_at(std::complex<Real>(static_cast<Real>(t.real()),
                                                                  static_cast<Real>(t.imag())));
        if (!std::isfinite(static_cast<double>(v.real())) || !std::isfinite(static_cast<double>(v.imag()))) {
            std::ostringstream os;
            os << "faber_coefficients: non-finite sample at node s = " << s << ", t = ("
               << static_cast<double>(t.real()) << "," << static_cast<double>(t.imag()) << ")";
            throw std::domain_error(os.str());
        }
        samples[static_cast<std::size_t>(s)] = CL(static_cast<long double>(v.real()),
                                                  static_cast<long double>(v.imag()));
    }

    std::vector<CL> tw(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        const long double th = two_pi * j / N;
        tw[static_cast<std::size_t>(j)] = CL(std::cos(th), -std::sin(th));
    }

    std::vector<Complex> out(static_cast<std::size_t>(n_max) + 1);
    long double rho_pow = 1.0L;
    for (int n = 0; n <= n_max; ++n) {
        CL acc(0.0L, 0.0L);
        std::size_t idx = 0;
        for (int s = 0; s < N; ++s) {
            acc += samples[static_cast<std::size_t>(s)] * tw[idx];
            idx += static_cast<std::size_t>(n);
            if (idx >= static_cast<std::size_t>(N)) idx -= static_cast<std::size_t>(N);
        }
        acc /= static_cast<long double>(N) * rho_pow;
        out[static_cast<std::size_t>(n)] = Complex(static_cast<double>(acc.real()),
                                                   static_cast<double>(acc.imag()));
        rho_pow *= rho_l;
    }
    return out;
}

}  // namespace detail

inline FaberCoefficients faber_coefficients(const std::function<Complex(Complex)>& G, const Geometry& g,
                                            int n_max, double rho, int N = 4096) {
    FaberCoefficients fc;
    fc.values = detail::faber_coefficients_impl<double>(G, g, n_max, rho, N);
    fc.rho_used = rho;
    fc.N_used = N;
    return fc;
}

// Extended-precision entry point: sampling, nodes and accumulation all in
// long double. Needed when coefficients of interest sit many orders of
// magnitude below the integrand scale (e.g. biorthogonality checks at high
// degree, where |Phi_j| ~ rho^j on the contour but [Phi_j]_n is 0 or 1).
inline FaberCoefficients faber_coefficients_extended(
    const std::function<std::complex<long double>(std::complex<long double>)>& G, const Geometry& g,
    int n_max, double rho, int N = 4096) {
    FaberCoefficients fc;
    fc.values = detail::faber_coefficients_impl<long double>(G, g, n_max, rho, N);
    fc.rho_used = rho;
    fc.N_used = N;
    return fc;
}

inline Complex evaluate_faber_series(const FaberCoefficients& c, const FaberBasis& basis, Complex z,
                                     int n_terms) {
    if (n_terms < 0 || n_terms > static_cast<int>(c.values.size()) ||
        n_terms > static_cast<int>(basis.polys.size())) {
        throw std::invalid_argument("evaluate_faber_series: n_terms exceeds available coefficients or basis");
    }
    Complex acc(0.0);
    for (int n = 0; n < n_terms; ++n) {
        acc += c.values[static_cast<std::size_t>(n)] * basis.polys[static_cast<std::size_t>(n)](z);
    }
    return acc;
}

// Root-test estimate of rho_0(G) = (limsup |[G]_n|^{1/n})^{-1}: least-squares
// slope of log|[G]_n| against n over [first, last], entries below the noise
// floor excluded. Equals the modulus of the level curve through the nearest
// singularity of G.
inline double estimate_rho0(const FaberCoefficients& c, int first, int last,
                            double noise_floor_rel = 1e-14) {
    if (first < 0 || last < first || last >= static_cast<int>(c.values.size())) {
        throw std::invalid_argument("estimate_rho0: window out of range");
    }
    double vmax = 0.0;
    for (const Complex& v : c.values) vmax = std::max(vmax, std::abs(v));
    const double floor = noise_floor_rel * vmax;

    double sn = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (int n = first; n <= last; ++n) {
        const double a = std::abs(c.values[static_cast<std::size_t>(n)]);
        if (!(a > floor)) continue;
        const double x = static_cast<double>(n), y = std::log(a);
        sn += 1; sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++used;
    }
    if (used < 2) {
        throw std::domain_error("estimate_rho0: indeterminate rate (window coefficients at or below noise floor)");
    }
    const double slope = (sn * sxy - sx * sy) / (sn * sxx - sx * sx);
    return std::exp(-slope);
}

}  // namespace padefaber
