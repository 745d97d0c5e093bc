#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace padefaber {

using Complex = std::complex<double>;

// Polynomial in the power basis; coeffs[k] multiplies z^k. The zero
// polynomial has an empty coefficient vector and degree -1.
class ComplexPolynomial {
public:
    ComplexPolynomial() = default;
    explicit ComplexPolynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) { strip_trailing_zeros(); }
    ComplexPolynomial(std::initializer_list<Complex> coeffs) : c_(coeffs) { strip_trailing_zeros(); }

    static ComplexPolynomial one() { return ComplexPolynomial{Complex(1.0)}; }

    static ComplexPolynomial monomial(int degree, Complex coeff = Complex(1.0)) {
        if (degree < 0) throw std::invalid_argument("monomial: negative degree");
        std::vector<Complex> c(static_cast<std::size_t>(degree) + 1, Complex(0.0));
        c.back() = coeff;
        return ComplexPolynomial(std::move(c));
    }

    // leading * prod (z - r_i)
    static ComplexPolynomial from_roots(const std::vector<Complex>& roots, Complex leading = Complex(1.0)) {
        ComplexPolynomial p{leading};
        for (const Complex& r : roots) p = p * ComplexPolynomial{-r, Complex(1.0)};
        return p;
    }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<Complex>& coeffs() const { return c_; }

    Complex coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(c_.size())) return Complex(0.0);
        return c_[static_cast<std::size_t>(k)];
    }

    Complex operator()(Complex z) const { return eval_as<Complex>(z); }

    // Horner in a caller-chosen complex arithmetic (coefficients widen exactly).
    template <class C>
    C eval_as(C z) const {
        if (c_.empty()) return C(0.0);
        C acc = C(c_.back());
        for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) {
            acc = acc * z + C(c_[static_cast<std::size_t>(k)]);
        }
        return acc;
    }

    double coeff_inf_norm() const {
        double m = 0.0;
        for (const Complex& v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    // sum_k |c_k| |z|^k, the natural scale for evaluation residuals
    double eval_scale(Complex z) const {
        double az = std::abs(z), p = 1.0, s = 0.0;
        for (const Complex& v : c_) { s += std::abs(v) * p; p *= az; }
        return s;
    }

    ComplexPolynomial operator+(const ComplexPolynomial& o) const {
        std::vector<Complex> c(std::max(c_.size(), o.c_.size()), Complex(0.0));
        for (std::size_t k = 0; k < c_.size(); ++k) c[k] += c_[k];
        for (std::size_t k = 0; k < o.c_.size(); ++k) c[k] += o.c_[k];
        return ComplexPolynomial(std::move(c));
    }

    ComplexPolynomial operator-(const ComplexPolynomial& o) const { return *this + (-o); }

    ComplexPolynomial operator-() const {
        std::vector<Complex> c(c_);
        for (auto& v : c) v = -v;
        return ComplexPolynomial(std::move(c));
    }

    ComplexPolynomial operator*(const ComplexPolynomial& o) const {
        if (is_zero() || o.is_zero()) return {};
        std::vector<Complex> c(c_.size() + o.c_.size() - 1, Complex(0.0));
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) c[i + j] += c_[i] * o.c_[j];
        return ComplexPolynomial(std::move(c));
    }

    ComplexPolynomial operator*(Complex s) const {
        std::vector<Complex> c(c_);
        for (auto& v : c) v *= s;
        return ComplexPolynomial(std::move(c));
    }

    ComplexPolynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<Complex> c(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) c[k - 1] = c_[k] * static_cast<double>(k);
        return ComplexPolynomial(std::move(c));
    }

    // Drops trailing coefficients below rel_tol * max |coeff|.
    ComplexPolynomial trimmed(double rel_tol) const {
        const double cut = rel_tol * coeff_inf_norm();
        std::size_t n = c_.size();
        while (n > 0 && std::abs(c_[n - 1]) <= cut) --n;
        return ComplexPolynomial(std::vector<Complex>(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(n)));
    }

private:
    void strip_trailing_zeros() {
        while (!c_.empty() && c_.back() == Complex(0.0)) c_.pop_back();
    }

    std::vector<Complex> c_;
};

inline ComplexPolynomial operator*(Complex s, const ComplexPolynomial& p) { return p * s; }

namespace detail {

// Parlett-Reinsch style diagonal balancing by powers of 2.
inline void balance_companion(Eigen::MatrixXcd& m) {
    const Eigen::Index n = m.rows();
    bool changed = true;
    int sweeps = 0;
    while (changed && sweeps++ < 32) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = m.row(i).template lpNorm<1>();
            const double c = m.col(i).template lpNorm<1>();
            if (r == 0.0 || c == 0.0) continue;
            int ex = 0;
            std::frexp(r / c, &ex);
            ex /= 2;
            if (ex != 0) {
                const double sc = std::ldexp(1.0, ex);
                const double sr = std::ldexp(1.0, -ex);
                if (std::ldexp(c, ex) + std::ldexp(r, -ex) < 0.95 * (c + r)) {
                    changed = true;
                    m.col(i) *= sc;
                    m.row(i) *= sr;
                }
            }
        }
    }
}

}  // namespace detail

// All roots with multiplicity, as eigenvalues of the balanced companion
// matrix of the monic rescaling. Each root is verified against the backward
// stability bound |p(r)| <= tol * sum_k |c_k| |r|^k.
inline std::vector<Complex> polynomial_roots(const ComplexPolynomial& p, double tol = 1e-10) {
    const int deg = p.degree();
    if (deg < 1) throw std::invalid_argument("polynomial_roots: degree must be >= 1");

    const auto& c = p.coeffs();
    if (deg == 1) return {-c[0] / c[1]};

    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) m(i, i - 1) = Complex(1.0);
    for (int i = 0; i < deg; ++i) m(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
    detail::balance_companion(m);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("polynomial_roots: companion eigenvalue iteration failed to converge");
    }

    std::vector<Complex> roots(static_cast<std::size_t>(deg));
    for (int i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    // deterministic order
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });

    for (const Complex& r : roots) {
        const double res = std::abs(p(r));
        // coefficient-norm scale: stays meaningful when structural zero
        // coefficients make the pointwise Horner scale collapse (e.g. roots
        // at the origin of z^2 - a z)
        const double scale = p.coeff_inf_norm() * std::pow(std::max(1.0, std::abs(r)), deg);
        if (!(res <= tol * scale)) {
            std::ostringstream os;
            os << "polynomial_roots: residual " << res << " at root (" << r.real() << "," << r.imag()
               << ") exceeds " << tol << " * scale " << scale;
            throw std::runtime_error(os.str());
        }
    }
    return roots;
}

}  // namespace padefaber
