#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <quadmath.h>

namespace padefaber::detail {

// Complex arithmetic over __float128.
//
// The defect system mixes coefficient rows whose scales are separated by
// geometric factors, and the nullspace direction is determined by a signal
// that can sit 10+ decimal digits below the leading entries. Solving that
// system from double entries caps the recoverable accuracy at roughly
// eps_double / (s2/s1), which is not enough for deep rows. Quadrature and
// elimination for the denominator path therefore run on this type; results
// are rounded to double at the API boundary.
struct QuadComplex {
    __float128 re{0};
    __float128 im{0};

    QuadComplex() = default;
    QuadComplex(double r) : re(r) {}
    QuadComplex(__float128 r) : re(r) {}
    QuadComplex(__float128 r, __float128 i) : re(r), im(i) {}
    QuadComplex(std::complex<double> z) : re(z.real()), im(z.imag()) {}

    std::complex<double> to_double() const {
        return {static_cast<double>(re), static_cast<double>(im)};
    }
};

inline QuadComplex operator+(QuadComplex a, QuadComplex b) { return {a.re + b.re, a.im + b.im}; }
inline QuadComplex operator-(QuadComplex a, QuadComplex b) { return {a.re - b.re, a.im - b.im}; }
inline QuadComplex operator-(QuadComplex a) { return {-a.re, -a.im}; }
inline QuadComplex operator*(QuadComplex a, QuadComplex b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline QuadComplex operator/(QuadComplex a, QuadComplex b) {
    const __float128 d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
inline QuadComplex& operator+=(QuadComplex& a, QuadComplex b) { a = a + b; return a; }
inline QuadComplex& operator-=(QuadComplex& a, QuadComplex b) { a = a - b; return a; }
inline QuadComplex& operator*=(QuadComplex& a, QuadComplex b) { a = a * b; return a; }

// l1 magnitude; monotone enough for pivot selection and scale estimates.
inline __float128 abs1(QuadComplex a) { return fabsq(a.re) + fabsq(a.im); }
inline __float128 abs2(QuadComplex a) { return sqrtq(a.re * a.re + a.im * a.im); }

// e^{-2 pi i k / N} for k = 0..N-1.
inline std::vector<QuadComplex> dft_twiddles(int N) {
    std::vector<QuadComplex> tw(static_cast<std::size_t>(N));
    const __float128 two_pi = 2 * M_PIq;
    for (int k = 0; k < N; ++k) {
        const __float128 th = two_pi * k / N;
        tw[static_cast<std::size_t>(k)] = QuadComplex{cosq(th), -sinq(th)};
    }
    return tw;
}

// Row-major dense matrix, rows x (rows + 1).
struct QuadMatrix {
    int rows{0};
    int cols{0};
    std::vector<QuadComplex> a;

    QuadComplex& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    const QuadComplex& at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

// Nullspace vector of an underdetermined system (cols = rows + 1) by Gaussian
// elimination with full pivoting. When the matrix is numerically rank
// deficient more than one column stays free; the highest-index free column is
// set to 1 and the rest to 0, which keeps the output deterministic.
inline std::vector<QuadComplex> nullspace_vector(QuadMatrix M) {
    const int rows = M.rows;
    const int cols = M.cols;
    if (cols != rows + 1) throw std::invalid_argument("nullspace_vector: need cols == rows + 1");

    __float128 scale0 = 0;
    for (const auto& e : M.a) scale0 = std::max(scale0, abs1(e));
    if (scale0 == 0) {
        // zero matrix: everything is a null vector
        std::vector<QuadComplex> q(static_cast<std::size_t>(cols));
        q[0] = QuadComplex{1.0};
        return q;
    }

    std::vector<int> pivot_col;
    std::vector<bool> col_used(static_cast<std::size_t>(cols), false);
    const __float128 drop = scale0 * 1e-32q;

    int step = 0;
    for (; step < rows; ++step) {
        int pr = -1, pc = -1;
        __float128 best = 0;
        for (int i = step; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                if (col_used[static_cast<std::size_t>(j)]) continue;
                const __float128 v = abs1(M.at(i, j));
                if (v > best) { best = v; pr = i; pc = j; }
            }
        }
        if (pr < 0 || best <= drop) break;  // numerically rank deficient
        if (pr != step) {
            for (int j = 0; j < cols; ++j) std::swap(M.at(step, j), M.at(pr, j));
        }
        col_used[static_cast<std::size_t>(pc)] = true;
        pivot_col.push_back(pc);
        const QuadComplex piv = M.at(step, pc);
        for (int i = step + 1; i < rows; ++i) {
            const QuadComplex f = M.at(i, pc) / piv;
            if (f.re == 0 && f.im == 0) continue;
            for (int j = 0; j < cols; ++j) M.at(i, j) -= f * M.at(step, j);
            M.at(i, pc) = QuadComplex{};  // kill residual roundoff
        }
    }

    std::vector<QuadComplex> q(static_cast<std::size_t>(cols));
    int free_col = -1;
    for (int j = cols - 1; j >= 0; --j) {
        if (!col_used[static_cast<std::size_t>(j)]) { free_col = j; break; }
    }
    q[static_cast<std::size_t>(free_col)] = QuadComplex{1.0};

    for (int s = static_cast<int>(pivot_col.size()) - 1; s >= 0; --s) {
        const int pc = pivot_col[static_cast<std::size_t>(s)];
        QuadComplex acc{};
        for (int j = 0; j < cols; ++j) {
            if (j == pc) continue;
            if (q[static_cast<std::size_t>(j)].re == 0 && q[static_cast<std::size_t>(j)].im == 0) continue;
            acc += M.at(s, j) * q[static_cast<std::size_t>(j)];
        }
        q[static_cast<std::size_t>(pc)] = -acc / M.at(s, pc);
    }
    return q;
}

}  // namespace padefaber::detail
