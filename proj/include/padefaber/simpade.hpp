#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "padefaber/complex_polynomial.hpp"
#include "padefaber/detail/extended.hpp"
#include "padefaber/faber.hpp"
#include "padefaber/geometry.hpp"

namespace padefaber {

// m = (m_1, ..., m_d), not all zero.
struct MultiIndex {
    std::vector<int> orders;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> m) : orders(std::move(m)) {
        if (orders.empty()) throw std::invalid_argument("MultiIndex: dimension must be >= 1");
        int total = 0;
        for (int v : orders) {
            if (v < 0) throw std::invalid_argument("MultiIndex: entries must be nonnegative");
            total += v;
        }
        if (total == 0) throw std::invalid_argument("MultiIndex: at least one entry must be positive");
    }

    int size() const { return static_cast<int>(orders.size()); }
    int total() const {
        int t = 0;
        for (int v : orders) t += v;
        return t;
    }
    int max_order() const { return *std::max_element(orders.begin(), orders.end()); }
    int min_order() const { return *std::min_element(orders.begin(), orders.end()); }
};

// coefficients[l-1] multiplies (z - pole)^{-l}, l = 1..order.
struct PrincipalPart {
    Complex pole;
    int order{1};
    std::vector<Complex> coefficients;
};

struct ComponentFunction {
    std::vector<PrincipalPart> principal_parts;
    ComplexPolynomial entire;

    template <class C>
    C eval_as(C z) const {
        C acc = entire.is_zero() ? C(0.0) : entire.eval_as<C>(z);
        for (const auto& pp : principal_parts) {
            const C inv = C(1.0) / (z - C(pp.pole));
            C p = inv;
            for (int l = 1; l <= pp.order; ++l) {
                acc += C(pp.coefficients[static_cast<std::size_t>(l - 1)]) * p;
                p *= inv;
            }
        }
        return acc;
    }

    Complex operator()(Complex z) const { return eval_as<Complex>(z); }
};

struct PoleInfo {
    Complex location;
    int order{1};
    double abs_phi{0.0};  // |Phi(location)|
};

// A d-vector of meromorphic test functions with ground-truth pole data.
struct VectorFunctionSpec {
    std::vector<ComponentFunction> components;
    Geometry geometry;

    int dimension() const { return static_cast<int>(components.size()); }

    // Distinct poles of the vector with their vector orders (max order across
    // components). Poles closer than 1e-12 (relative) are identified.
    std::vector<PoleInfo> vector_poles() const {
        std::vector<PoleInfo> out;
        for (const auto& comp : components) {
            for (const auto& pp : comp.principal_parts) {
                bool merged = false;
                for (auto& known : out) {
                    const double scale = std::max(1.0, std::abs(known.location));
                    if (std::abs(known.location - pp.pole) <= 1e-12 * scale) {
                        known.order = std::max(known.order, pp.order);
                        merged = true;
                        break;
                    }
                }
                if (!merged) out.push_back({pp.pole, pp.order, 0.0});
            }
        }
        for (auto& p : out) p.abs_phi = std::abs(geometry.phi(p.location));
        return out;
    }

    bool has_pole() const {
        for (const auto& comp : components)
            if (!comp.principal_parts.empty()) return true;
        return false;
    }

    void validate() const {
        if (components.empty()) throw std::invalid_argument("VectorFunctionSpec: needs at least one component");
        for (const auto& comp : components) {
            for (const auto& pp : comp.principal_parts) {
                if (pp.order < 1) throw std::invalid_argument("principal part: order must be >= 1");
                if (static_cast<int>(pp.coefficients.size()) != pp.order) {
                    throw std::invalid_argument("principal part: need exactly `order` coefficients");
                }
                if (std::abs(pp.coefficients.back()) == 0.0) {
                    throw std::invalid_argument("principal part: top-order coefficient must be nonzero");
                }
                double abs_phi;
                try {
                    abs_phi = std::abs(geometry.phi(pp.pole));
                } catch (const std::domain_error&) {
                    throw std::invalid_argument("principal part: pole lies inside E");
                }
                if (!(abs_phi > 1.0)) throw std::invalid_argument("principal part: pole must lie outside E");
            }
        }
    }
};

// Poles of F inside the largest canonical domain that holds at most |m| of
// them (counting vector orders), the domain index rho_m (+inf when F never
// accumulates more than |m| poles), the normalization threshold L, and the
// reference denominator built from those poles.
struct PoleProfile {
    std::vector<PoleInfo> poles;  // sorted by |Phi| ascending
    double rho_m{std::numeric_limits<double>::infinity()};
    double L{1.0};
    ComplexPolynomial Q_true;

    int total_order() const {
        int t = 0;
        for (const auto& p : poles) t += p.order;
        return t;
    }
};

namespace detail {

// Eq.(2)-style factor: zeros near E (|Phi| <= L) enter monically as (z - r),
// zeros away from E as (1 - z/r). Roots at the origin always take the monic
// factor; the reciprocal form is singular there.
inline ComplexPolynomial normalization_factor(Complex root, double L, const Geometry& g) {
    bool near_e;
    if (std::abs(root) < 1e-10) {
        near_e = true;
    } else {
        try {
            near_e = std::abs(g.phi(root)) <= L;
        } catch (const std::domain_error&) {
            near_e = true;  // inside E
        }
    }
    if (near_e) return ComplexPolynomial{-root, Complex(1.0)};
    return ComplexPolynomial{Complex(1.0), -1.0 / root};
}

}  // namespace detail

inline PoleProfile pole_profile(const VectorFunctionSpec& F, const MultiIndex& m) {
    if (m.size() != F.dimension()) {
        throw std::invalid_argument("pole_profile: multi-index dimension must match the function vector");
    }
    auto poles = F.vector_poles();
    if (poles.empty()) throw std::invalid_argument("pole_profile: the function vector has no poles");

    std::sort(poles.begin(), poles.end(), [](const PoleInfo& a, const PoleInfo& b) {
        if (a.abs_phi != b.abs_phi) return a.abs_phi < b.abs_phi;
        if (a.location.real() != b.location.real()) return a.location.real() < b.location.real();
        return a.location.imag() < b.location.imag();
    });

    PoleProfile profile;
    const int budget = m.total();
    int cum = 0;
    for (const auto& p : poles) {
        if (cum + p.order <= budget) {
            profile.poles.push_back(p);
            cum += p.order;
        } else {
            profile.rho_m = p.abs_phi;
            break;
        }
    }
    if (std::isfinite(profile.rho_m)) {
        // D_rho is open: poles sitting exactly on Gamma_rho are outside it.
        std::erase_if(profile.poles, [&](const PoleInfo& p) {
            return p.abs_phi >= profile.rho_m * (1.0 - 1e-12);
        });
    }

    if (!profile.poles.empty()) {
        profile.L = (1.0 + profile.poles.front().abs_phi) / 2.0;
        ComplexPolynomial q = ComplexPolynomial::one();
        for (const auto& p : profile.poles) {
            const ComplexPolynomial f = detail::normalization_factor(p.location, profile.L, F.geometry);
            for (int l = 0; l < p.order; ++l) q = q * f;
        }
        profile.Q_true = q;
    }
    return profile;
}

struct QuadratureSettings {
    double rho{0.0};         // <= 1 means: derive from ground-truth pole data
    int N{4096};
    int residual_buffer{8};  // W: residuals reported for k = n - m_a + 1 .. n + W
};

// Default rho: geometric mean of 1 and the |Phi| level of the pole nearest E,
// balancing integrand decay against distance from the singularities.
inline double resolve_quadrature_rho(const VectorFunctionSpec& F, const QuadratureSettings& quad) {
    if (quad.rho > 1.0) return quad.rho;
    const auto poles = F.vector_poles();
    if (poles.empty()) {
        throw std::invalid_argument("quadrature rho must be supplied for pole-free functions");
    }
    double min_phi = std::numeric_limits<double>::infinity();
    for (const auto& p : poles) min_phi = std::min(min_phi, p.abs_phi);
    return std::sqrt(min_phi);
}

namespace detail {

// Defect matrix in __float128: row (alpha, k) for k = n-m_alpha+1..n, column
// j = 0..|m|, entry [z^j F_alpha]_k. A null vector q of this matrix gives the
// denominator Q(z) = sum_j q_j z^j with vanishing Faber coefficients of
// Q F_alpha on the required window.
//
// The whole quadrature runs in quad precision: the nullspace direction is
// resolved by singular values that sink geometrically below the leading
// matrix scale as n grows, so double (or even 80-bit) entries would cap the
// attainable row depth well short of where the theory is interesting.
inline QuadMatrix defect_matrix_quad(const VectorFunctionSpec& F, int n, const MultiIndex& m,
                                     const QuadratureSettings& quad) {
    if (n < m.max_order()) throw std::invalid_argument("defect_matrix: need n >= max_alpha m_alpha");
    const int d = F.dimension();
    if (m.size() != d) throw std::invalid_argument("defect_matrix: dimension mismatch");
    const double rho = resolve_quadrature_rho(F, quad);
    const int N = quad.N;
    if (N < 2 * (n + 1)) {
        throw std::invalid_argument("defect_matrix: quadrature N below the anti-aliasing bound 2*(n+1)");
    }

    const int total = m.total();
    QuadMatrix M;
    M.rows = total;
    M.cols = total + 1;
    M.a.assign(static_cast<std::size_t>(M.rows) * M.cols, QuadComplex{});

    // nodes and twiddles
    std::vector<QuadComplex> t(static_cast<std::size_t>(N));
    const __float128 two_pi = 2 * M_PIq;
    const __float128 rho_q = rho;
    for (int s = 0; s < N; ++s) {
        const __float128 th = two_pi * s / N;
        const QuadComplex w{rho_q * cosq(th), rho_q * sinq(th)};
        t[static_cast<std::size_t>(s)] = F.geometry.psi_as<QuadComplex>(w);
    }
    const std::vector<QuadComplex> tw = dft_twiddles(N);

    // rho^{-k} for the window
    std::vector<__float128> rho_neg(static_cast<std::size_t>(n) + 1);
    rho_neg[0] = 1;
    for (int k = 1; k <= n; ++k) rho_neg[static_cast<std::size_t>(k)] = rho_neg[static_cast<std::size_t>(k - 1)] / rho_q;

    int row = 0;
    for (int alpha = 0; alpha < d; ++alpha) {
        const int ma = m.orders[static_cast<std::size_t>(alpha)];
        if (ma == 0) continue;

        std::vector<QuadComplex> base(static_cast<std::size_t>(N));
        for (int s = 0; s < N; ++s) {
            base[static_cast<std::size_t>(s)] =
                F.components[static_cast<std::size_t>(alpha)].eval_as<QuadComplex>(t[static_cast<std::size_t>(s)]);
        }

        std::vector<QuadComplex> sample = base;  // z^j F_alpha, j = 0 first
        for (int j = 0; j <= total; ++j) {
            if (j > 0) {
                for (int s = 0; s < N; ++s) sample[static_cast<std::size_t>(s)] *= t[static_cast<std::size_t>(s)];
            }
            for (int idx = 0; idx < ma; ++idx) {
                const int k = n - ma + 1 + idx;
                QuadComplex acc{};
                std::size_t p = 0;
                for (int s = 0; s < N; ++s) {
                    acc += sample[static_cast<std::size_t>(s)] * tw[p];
                    p += static_cast<std::size_t>(k);
                    if (p >= static_cast<std::size_t>(N)) p -= static_cast<std::size_t>(N);
                }
                acc = acc * QuadComplex{rho_neg[static_cast<std::size_t>(k)] / N};
                M.at(row + idx, j) = acc;
            }
        }
        row += ma;
    }
    return M;
}

}  // namespace detail

inline Eigen::MatrixXcd defect_matrix(const VectorFunctionSpec& F, int n, const MultiIndex& m,
                                      const QuadratureSettings& quad = {}) {
    const detail::QuadMatrix M = detail::defect_matrix_quad(F, n, m, quad);
    Eigen::MatrixXcd out(M.rows, M.cols);
    for (int i = 0; i < M.rows; ++i)
        for (int j = 0; j < M.cols; ++j) out(i, j) = M.at(i, j).to_double();
    return out;
}

struct DenominatorSolution {
    std::vector<Complex> q;   // unit Euclidean norm
    double sigma_min{0.0};    // residual of q, relative to the largest matrix entry
    double sigma_second{0.0}; // smallest computed singular value, same scaling
    bool unique{false};
};

namespace detail {

inline void finalize_solution(DenominatorSolution& sol, double degeneracy_ratio, double absolute_floor) {
    double norm = 0.0;
    for (const Complex& v : sol.q) norm += std::norm(v);
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (Complex& v : sol.q) v /= norm;
    } else {
        sol.q.assign(sol.q.size(), Complex(0.0));
        sol.q[0] = Complex(1.0);
    }
    sol.unique = sol.sigma_second > degeneracy_ratio * sol.sigma_min + absolute_floor;
}

// Singular-value diagnostics on the entry-scaled double matrix. sigma_min is
// the residual of the chosen null vector (the numerical stand-in for the
// structural zero singular value of a rows x (rows+1) system); sigma_second
// is the smallest computed singular value, whose collapse signals an extra
// null direction.
inline void attach_sigma_diagnostics(DenominatorSolution& sol, const Eigen::MatrixXcd& scaled) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scaled);
    const auto& s = svd.singularValues();
    sol.sigma_second = s(s.size() - 1);
    Eigen::VectorXcd qv(scaled.cols());
    for (int i = 0; i < scaled.cols(); ++i) qv(i) = sol.q[static_cast<std::size_t>(i)];
    sol.sigma_min = (scaled * qv).norm();
}

inline DenominatorSolution solve_denominator_extended(const QuadMatrix& M, double degeneracy_ratio = 1e6,
                                                      double absolute_floor = 1e-12) {
    __float128 scale = 0;
    for (const auto& e : M.a) scale = std::max(scale, abs1(e));

    DenominatorSolution sol;
    sol.q.assign(static_cast<std::size_t>(M.cols), Complex(0.0));
    if (scale == 0) {
        sol.q[0] = Complex(1.0);
        sol.sigma_min = 0.0;
        sol.sigma_second = 0.0;
        sol.unique = false;
        return sol;
    }

    QuadMatrix scaled = M;
    for (auto& e : scaled.a) e = e / QuadComplex{scale};

    const std::vector<QuadComplex> qq = nullspace_vector(scaled);
    __float128 norm2 = 0;
    for (const auto& v : qq) norm2 += v.re * v.re + v.im * v.im;
    const __float128 inv = 1 / sqrtq(norm2);
    for (std::size_t i = 0; i < qq.size(); ++i) {
        sol.q[i] = Complex(static_cast<double>(qq[i].re * inv), static_cast<double>(qq[i].im * inv));
    }

    Eigen::MatrixXcd scaled_d(M.rows, M.cols);
    for (int i = 0; i < M.rows; ++i)
        for (int j = 0; j < M.cols; ++j) scaled_d(i, j) = scaled.at(i, j).to_double();
    attach_sigma_diagnostics(sol, scaled_d);
    finalize_solution(sol, degeneracy_ratio, absolute_floor);
    return sol;
}

}  // namespace detail

// Null direction of the defect matrix: right singular vector of the smallest
// singular value. The homogeneous system always admits a nontrivial solution;
// `unique` reports whether the second-smallest singular value stands clear of
// the residual, i.e. whether the null direction is numerically unambiguous.
inline DenominatorSolution solve_denominator(const Eigen::MatrixXcd& M, double degeneracy_ratio = 1e6,
                                             double absolute_floor = 1e-12) {
    if (M.cols() != M.rows() + 1) {
        throw std::invalid_argument("solve_denominator: expected |m| rows and |m|+1 columns");
    }
    DenominatorSolution sol;
    sol.q.assign(static_cast<std::size_t>(M.cols()), Complex(0.0));

    const double scale = M.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        sol.q[0] = Complex(1.0);
        sol.unique = false;
        return sol;
    }
    const Eigen::MatrixXcd scaled = M / scale;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(scaled, Eigen::ComputeFullV);
    const Eigen::VectorXcd v = svd.matrixV().col(M.cols() - 1);
    for (int i = 0; i < M.cols(); ++i) sol.q[static_cast<std::size_t>(i)] = v(i);
    detail::attach_sigma_diagnostics(sol, scaled);
    detail::finalize_solution(sol, degeneracy_ratio, absolute_floor);
    return sol;
}

// Rebuilds Q from its zeros with the threshold-L factor convention; degree
// and root multiset are preserved, only the per-root scaling changes.
inline ComplexPolynomial normalize_denominator(const ComplexPolynomial& q_raw, double L, const Geometry& g,
                                               double root_tol = 1e-10) {
    if (q_raw.is_zero()) throw std::invalid_argument("normalize_denominator: Q must not vanish identically");
    if (!(L > 0.5)) throw std::invalid_argument("normalize_denominator: need L > 1/2");
    if (q_raw.degree() == 0) return ComplexPolynomial::one();

    std::vector<Complex> roots;
    try {
        roots = polynomial_roots(q_raw, root_tol);
    } catch (const std::runtime_error& e) {
        std::ostringstream os;
        os << "normalize_denominator: root finding failed: " << e.what();
        throw std::runtime_error(os.str());
    }

    ComplexPolynomial out = ComplexPolynomial::one();
    for (const Complex& r : roots) out = out * detail::normalization_factor(r, L, g);
    return out;
}

struct ResidualWindow {
    int first_k{0};               // = n - m_alpha + 1
    std::vector<Complex> values;  // [Q F_alpha]_k for k = first_k .. n + W
};

struct NumeratorResult {
    std::vector<ComplexPolynomial> P;
    std::vector<ResidualWindow> residuals;
};

// P_alpha = sum_{k=0}^{n-m_alpha} [Q F_alpha]_k Phi_k, plus the trailing
// coefficient window that certifies the defect conditions.
inline NumeratorResult numerators(const VectorFunctionSpec& F, const ComplexPolynomial& Q, int n,
                                  const MultiIndex& m, const QuadratureSettings& quad = {},
                                  const FaberBasis* basis = nullptr) {
    if (n < m.max_order()) throw std::invalid_argument("numerators: need n >= max_alpha m_alpha");
    const int d = F.dimension();
    if (m.size() != d) throw std::invalid_argument("numerators: dimension mismatch");

    const double rho = resolve_quadrature_rho(F, quad);
    const int W = quad.residual_buffer;
    const int k_max = n + W;

    FaberBasis local;
    if (basis == nullptr || basis->max_degree() < n - m.min_order()) {
        local = faber_basis(F.geometry, n - m.min_order());
        basis = &local;
    }

    NumeratorResult out;
    out.P.reserve(static_cast<std::size_t>(d));
    out.residuals.reserve(static_cast<std::size_t>(d));
    using CL = std::complex<long double>;

    for (int alpha = 0; alpha < d; ++alpha) {
        const auto& comp = F.components[static_cast<std::size_t>(alpha)];
        const std::vector<Complex> coeffs = detail::faber_coefficients_impl<long double>(
            [&](CL t) { return Q.eval_as<CL>(t) * comp.eval_as<CL>(t); }, F.geometry, k_max, rho, quad.N);

        const int ma = m.orders[static_cast<std::size_t>(alpha)];
        const int p_top = n - ma;

        std::vector<CL> pc(static_cast<std::size_t>(std::max(p_top + 1, 1)), CL(0.0L));
        for (int k = 0; k <= p_top; ++k) {
            const CL ck(coeffs[static_cast<std::size_t>(k)]);
            const auto& phik = basis->polys[static_cast<std::size_t>(k)].coeffs();
            for (std::size_t j = 0; j < phik.size(); ++j) pc[j] += ck * CL(phik[j]);
        }
        std::vector<Complex> pcd(pc.size());
        for (std::size_t j = 0; j < pc.size(); ++j) {
            pcd[j] = Complex(static_cast<double>(pc[j].real()), static_cast<double>(pc[j].imag()));
        }
        // quadrature-noise coefficients above the true degree carry no
        // information; drop them relative to the numerator scale
        out.P.push_back(ComplexPolynomial(std::move(pcd)).trimmed(1e-14));

        ResidualWindow rw;
        rw.first_k = n - ma + 1;
        rw.values.assign(coeffs.begin() + rw.first_k, coeffs.begin() + (k_max + 1));
        out.residuals.push_back(std::move(rw));
    }
    return out;
}

struct ApproximantResult {
    int n{0};
    MultiIndex m;
    ComplexPolynomial Q;
    std::vector<ComplexPolynomial> P;
    std::vector<ResidualWindow> residuals;
    double sigma_min{0.0};
    double sigma_second{0.0};
    bool unique{false};
};

inline Complex evaluate_approximant(const ApproximantResult& res, int alpha, Complex z) {
    if (alpha < 0 || alpha >= static_cast<int>(res.P.size())) {
        throw std::invalid_argument("evaluate_approximant: component index out of range");
    }
    const Complex qz = res.Q(z);
    const double scale = std::max(res.Q.eval_scale(z), std::numeric_limits<double>::min());
    if (std::abs(qz) < 1e-13 * scale) {
        throw std::domain_error("evaluate_approximant: z is a zero of the denominator");
    }
    return res.P[static_cast<std::size_t>(alpha)](z) / qz;
}

struct SolveOptions {
    double degeneracy_ratio{1e6};
    double absolute_floor{1e-12};
    double coeff_trim{1e-13};
    double root_tol{1e-10};
};

// Full pipeline for one (n, m): defect system, null direction, Eq.(2)
// normalization (threshold L from the profile when available, otherwise the
// unit-norm q is kept as-is), numerators and residual window.
inline ApproximantResult compute_approximant(const VectorFunctionSpec& F, int n, const MultiIndex& m,
                                             const QuadratureSettings& quad = {},
                                             const PoleProfile* profile = nullptr,
                                             const FaberBasis* basis = nullptr,
                                             const SolveOptions& opts = {}) {
    const detail::QuadMatrix M = detail::defect_matrix_quad(F, n, m, quad);
    const DenominatorSolution sol =
        detail::solve_denominator_extended(M, opts.degeneracy_ratio, opts.absolute_floor);

    ApproximantResult out;
    out.n = n;
    out.m = m;
    out.sigma_min = sol.sigma_min;
    out.sigma_second = sol.sigma_second;
    out.unique = sol.unique;

    ComplexPolynomial q_raw = ComplexPolynomial(sol.q).trimmed(opts.coeff_trim);
    if (q_raw.is_zero()) q_raw = ComplexPolynomial::one();
    out.Q = (profile != nullptr && q_raw.degree() >= 1)
                ? normalize_denominator(q_raw, profile->L, F.geometry, opts.root_tol)
                : q_raw;

    NumeratorResult num = numerators(F, out.Q, n, m, quad, basis);
    out.P = std::move(num.P);
    out.residuals = std::move(num.residuals);
    return out;
}

}  // namespace padefaber
