#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "padefaber/simpade.hpp"

using namespace padefaber;

namespace {

ComponentFunction simple_poles(std::vector<Complex> poles) {
    ComponentFunction comp;
    for (const Complex& p : poles) comp.principal_parts.push_back({p, 1, {Complex(1.0)}});
    return comp;
}

VectorFunctionSpec disk_pair() {
    // F = (1/(z-2), 1/(z-3)) on the unit disk: rational with exactly |m| poles
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0)}), simple_poles({Complex(3.0)})};
    return F;
}

VectorFunctionSpec disk_d1_ensemble() {
    // F = (1/(z-2) + 1/(z-6), 1/(z-3) + 1/(z-6))
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0), Complex(6.0)}), simple_poles({Complex(3.0), Complex(6.0)})};
    return F;
}

VectorFunctionSpec segment_s1_ensemble() {
    // F = (1/(z-1.25) + 1/(z-2.125), 1/(z+1.25)) on [-1,1]
    VectorFunctionSpec F;
    F.geometry = Geometry::segment(Complex(-1.0), Complex(1.0));
    F.components = {simple_poles({Complex(1.25), Complex(2.125)}), simple_poles({Complex(-1.25)})};
    return F;
}

double coeff_distance(const ComplexPolynomial& a, const ComplexPolynomial& b) {
    double worst = 0.0;
    for (int k = 0; k <= std::max(a.degree(), b.degree()); ++k) {
        worst = std::max(worst, std::abs(a.coeff(k) - b.coeff(k)));
    }
    return worst;
}

}  // namespace

TEST_CASE("multi-index invariants") {
    CHECK_THROWS_AS(MultiIndex(std::vector<int>{}), std::invalid_argument);
    CHECK_THROWS_AS(MultiIndex({0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(MultiIndex({1, -1}), std::invalid_argument);
    const MultiIndex m({2, 0, 1});
    CHECK(m.total() == 3);
    CHECK(m.max_order() == 2);
    CHECK(m.min_order() == 0);
}

TEST_CASE("pole profile orders poles by level and finds rho_m") {
    {
        const auto profile = pole_profile(disk_d1_ensemble(), MultiIndex({1, 1}));
        REQUIRE(profile.poles.size() == 2);
        CHECK(std::abs(profile.poles[0].location - Complex(2.0)) < 1e-14);
        CHECK(std::abs(profile.poles[1].location - Complex(3.0)) < 1e-14);
        CHECK(profile.poles[0].order == 1);
        CHECK(profile.poles[1].order == 1);
        CHECK(std::abs(profile.rho_m - 6.0) < 1e-12);
        CHECK(std::abs(profile.L - 1.5) < 1e-12);
    }
    {
        const auto profile = pole_profile(segment_s1_ensemble(), MultiIndex({1, 1}));
        REQUIRE(profile.poles.size() == 2);
        CHECK(std::abs(profile.poles[0].location.real()) - 1.25 < 1e-14);
        CHECK(std::abs(profile.rho_m - 4.0) < 1e-12);
        CHECK(std::abs(profile.L - 1.5) < 1e-12);
    }
    {
        const auto profile = pole_profile(disk_pair(), MultiIndex({1, 1}));
        CHECK(!std::isfinite(profile.rho_m));
        REQUIRE(profile.poles.size() == 2);
        // Q_true = (1 - z/2)(1 - z/3)
        const ComplexPolynomial expect{Complex(1.0), Complex(-5.0 / 6.0), Complex(1.0 / 6.0)};
        CHECK(coeff_distance(profile.Q_true, expect) < 1e-14);
    }
    {
        VectorFunctionSpec no_pole;
        no_pole.geometry = Geometry::disk(Complex(0.0), 1.0);
        no_pole.components = {ComponentFunction{{}, ComplexPolynomial{Complex(1.0)}}};
        CHECK_THROWS_AS(pole_profile(no_pole, MultiIndex({1})), std::invalid_argument);
    }
}

TEST_CASE("vector pole order is the max across components") {
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    ComponentFunction c1;
    c1.principal_parts.push_back({Complex(2.0), 2, {Complex(0.0), Complex(1.0)}});
    ComponentFunction c2;
    c2.principal_parts.push_back({Complex(2.0), 1, {Complex(1.0)}});
    F.components = {c1, c2};
    const auto poles = F.vector_poles();
    REQUIRE(poles.size() == 1);
    CHECK(poles[0].order == 2);
}

TEST_CASE("defect matrix of a scalar geometric function") {
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0)})};
    const MultiIndex m({1});

    for (int n : {1, 3, 6}) {
        const auto M = defect_matrix(F, n, m);
        REQUIRE(M.rows() == 1);
        REQUIRE(M.cols() == 2);
        const double f_n = -std::pow(2.0, -(n + 1));
        CHECK(std::abs(M(0, 0) - Complex(f_n)) < 1e-14);
        CHECK(std::abs(M(0, 1) - Complex(2.0 * f_n)) < 1e-14);
        // null vector proportional to (-2, 1): Q = z - 2
        CHECK(std::abs(-2.0 * M(0, 0) + M(0, 1)) < 1e-15);

        const auto sol = solve_denominator(M);
        CHECK(sol.unique);
        CHECK(sol.sigma_second > 0.1);  // scaled matrix has O(1) second singular value
        const Complex ratio = sol.q[0] / sol.q[1];
        CHECK(std::abs(ratio - Complex(-2.0)) < 1e-12);
    }
}

TEST_CASE("defect matrix null vector recovers both poles") {
    const auto F = disk_pair();
    const MultiIndex m({1, 1});
    const auto M = defect_matrix(F, 4, m);
    REQUIRE(M.rows() == 2);
    REQUIRE(M.cols() == 3);
    // coefficients of (z-2)(z-3) = 6 - 5z + z^2 annihilate every row
    const Eigen::Vector3cd q(6.0, -5.0, 1.0);
    CHECK((M * q).norm() < 1e-14);

    const auto sol = solve_denominator(M);
    CHECK(sol.unique);
    const Complex scale = sol.q[2];
    CHECK(std::abs(sol.q[0] / scale - Complex(6.0)) < 1e-10);
    CHECK(std::abs(sol.q[1] / scale - Complex(-5.0)) < 1e-10);
}

TEST_CASE("solve_denominator flags degeneracy") {
    {
        Eigen::MatrixXcd M(2, 3);
        M << 1.0, 0.5, 0.25, 1.0, 0.5, 0.25;  // identical rows
        const auto sol = solve_denominator(M);
        CHECK_FALSE(sol.unique);
        CHECK((std::abs(M(0, 0) * sol.q[0] + M(0, 1) * sol.q[1] + M(0, 2) * sol.q[2])) < 1e-12);
    }
    {
        const Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2, 3);
        const auto sol = solve_denominator(M);
        CHECK_FALSE(sol.unique);
        double norm = 0.0;
        for (const auto& v : sol.q) norm += std::norm(v);
        CHECK(std::abs(norm - 1.0) < 1e-14);
    }
    CHECK_THROWS_AS(solve_denominator(Eigen::MatrixXcd::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("normalize_denominator applies the threshold-L factor convention") {
    const auto disk = Geometry::disk(Complex(0.0), 1.0);
    {
        const auto raw = ComplexPolynomial::from_roots({Complex(2.0), Complex(3.0)}, Complex(0.37, 0.9));
        const auto normalized = normalize_denominator(raw, 1.5, disk);
        const ComplexPolynomial expect{Complex(1.0), Complex(-5.0 / 6.0), Complex(1.0 / 6.0)};
        CHECK(coeff_distance(normalized, expect) < 1e-12);
    }
    {
        // a root close to E keeps the monic factor
        const auto raw = ComplexPolynomial::from_roots({Complex(1.1)}, Complex(-2.0));
        const auto normalized = normalize_denominator(raw, 1.5, disk);
        CHECK(coeff_distance(normalized, ComplexPolynomial{Complex(-1.1), Complex(1.0)}) < 1e-12);
    }
    {
        const auto normalized = normalize_denominator(ComplexPolynomial{Complex(7.0)}, 1.5, disk);
        CHECK(coeff_distance(normalized, ComplexPolynomial::one()) < 1e-15);
    }
    {
        // root at the origin takes the monic factor even though Phi is large
        const auto g5 = Geometry::disk(Complex(5.0), 1.0);
        const auto raw = ComplexPolynomial::from_roots({Complex(0.0), Complex(8.0)});
        const auto normalized = normalize_denominator(raw, 1.5, g5);
        CHECK(normalized.degree() == 2);
        CHECK(std::abs(normalized(Complex(0.0))) < 1e-12);            // keeps the origin root
        CHECK(std::abs(normalized.coeff(1) - Complex(1.0)) < 1e-12);  // z * (1 - z/8)
    }
    CHECK_THROWS_AS(normalize_denominator(ComplexPolynomial{}, 1.5, disk), std::invalid_argument);
    CHECK_THROWS_AS(normalize_denominator(ComplexPolynomial::one(), 0.4, disk), std::invalid_argument);
}

TEST_CASE("numerators of an exactly annihilated function") {
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0)})};
    const MultiIndex m({1});
    const ComplexPolynomial Q{Complex(1.0), Complex(-0.5)};  // 1 - z/2 = -(z-2)/2

    for (int n : {1, 4, 9}) {
        const auto num = numerators(F, Q, n, m);
        REQUIRE(num.P.size() == 1);
        // Q F = -1/2 exactly
        CHECK(num.P[0].degree() <= 0);
        CHECK(std::abs(num.P[0].coeff(0) - Complex(-0.5)) < 1e-14);
        CHECK(num.residuals[0].first_k == n);
        for (const auto& r : num.residuals[0].values) CHECK(std::abs(r) < 1e-14);
    }
}

TEST_CASE("compute_approximant: exact recovery and the defect window") {
    const auto F = disk_pair();
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);

    for (int n : {2, 5, 11, 20}) {
        const auto ar = compute_approximant(F, n, m, {}, &profile);
        CHECK(ar.unique);
        CHECK(coeff_distance(ar.Q, profile.Q_true) < 1e-10);

        // defect property: window residuals tiny relative to the coefficient scale
        for (int alpha = 0; alpha < 2; ++alpha) {
            const auto& rw = ar.residuals[static_cast<std::size_t>(alpha)];
            double window_max = 0.0, total_max = 0.0;
            for (std::size_t i = 0; i < rw.values.size(); ++i) {
                const int k = rw.first_k + static_cast<int>(i);
                const double a = std::abs(rw.values[i]);
                total_max = std::max(total_max, a);
                if (k <= n) window_max = std::max(window_max, a);
            }
            // Q F_alpha is a polynomial of degree <= 1 here, so even the
            // buffer coefficients vanish; compare against the P scale
            double scale = std::max(total_max, ar.P[static_cast<std::size_t>(alpha)].coeff_inf_norm());
            CHECK(window_max <= 1e-10 * scale);
        }

        // the recovered rational function reproduces F away from the poles
        for (const Complex z : {Complex(0.0), Complex(0.3, -0.2), Complex(-0.9, 0.1)}) {
            for (int alpha = 0; alpha < 2; ++alpha) {
                const Complex truth = F.components[static_cast<std::size_t>(alpha)].eval_as<Complex>(z);
                CHECK(std::abs(evaluate_approximant(ar, alpha, z) - truth) < 1e-10);
            }
        }
    }
}

TEST_CASE("exact recovery with polynomial entire parts") {
    // n_0 = |m| + deg(entire) + 1; beyond it the denominator is exact
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    ComponentFunction c1 = simple_poles({Complex(2.0)});
    c1.entire = ComplexPolynomial{Complex(1.0), Complex(0.5), Complex(-0.25)};  // degree 2
    F.components = {c1, simple_poles({Complex(3.0)})};
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);
    const int n0 = m.total() + 2 + 1;

    for (int n = n0; n <= n0 + 6; ++n) {
        const auto ar = compute_approximant(F, n, m, {}, &profile);
        CHECK(coeff_distance(ar.Q, profile.Q_true) < 1e-8);
        for (const Complex z : {Complex(0.1, 0.2), Complex(-0.4, 0.0)}) {
            const Complex truth = F.components[0].eval_as<Complex>(z);
            CHECK(std::abs(evaluate_approximant(ar, 0, z) - truth) < 1e-9);
        }
    }
}

TEST_CASE("defect property holds when the function is not rational of degree |m|") {
    // third pole at 6 keeps the residual tail alive; the window must still be
    // ~9 orders below the overall coefficient scale
    const auto F = disk_d1_ensemble();
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);
    for (int n : {6, 12, 18}) {
        const auto ar = compute_approximant(F, n, m, {}, &profile);
        for (int alpha = 0; alpha < 2; ++alpha) {
            const auto& rw = ar.residuals[static_cast<std::size_t>(alpha)];
            double window_max = 0.0, total_max = 0.0;
            for (std::size_t i = 0; i < rw.values.size(); ++i) {
                const int k = rw.first_k + static_cast<int>(i);
                total_max = std::max(total_max, std::abs(rw.values[i]));
                if (k <= n) window_max = std::max(window_max, std::abs(rw.values[i]));
            }
            const double scale = std::max(total_max, ar.P[static_cast<std::size_t>(alpha)].coeff_inf_norm());
            CHECK(window_max <= 1e-9 * scale);
        }
    }
}

TEST_CASE("multi-index entries may be zero for individual components") {
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0)}), simple_poles({Complex(3.0)})};
    const MultiIndex m({1, 0});

    const auto M = defect_matrix(F, 4, m);
    CHECK(M.rows() == 1);
    CHECK(M.cols() == 2);

    const auto profile = pole_profile(F, m);
    CHECK(std::abs(profile.rho_m - 3.0) < 1e-12);  // only the pole at 2 fits the budget
    REQUIRE(profile.poles.size() == 1);

    const auto ar = compute_approximant(F, 6, m, {}, &profile);
    CHECK(ar.residuals[1].first_k == 7);  // no defect window for m_alpha = 0
    CHECK(coeff_distance(ar.Q, profile.Q_true) < 1e-9);
}

TEST_CASE("evaluate_approximant rejects zeros of Q") {
    const auto F = disk_pair();
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);
    const auto ar = compute_approximant(F, 6, m, {}, &profile);
    CHECK_THROWS_AS(evaluate_approximant(ar, 0, Complex(2.0)), std::domain_error);
    CHECK_THROWS_AS(evaluate_approximant(ar, 7, Complex(0.0)), std::invalid_argument);
    CHECK(std::isfinite(std::abs(evaluate_approximant(ar, 0, Complex(0.5, 0.5)))));
}

TEST_CASE("normalized denominators stay bounded along the row") {
    const auto F = disk_d1_ensemble();
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);

    std::vector<double> sups;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (int n = 2; n <= 20; ++n) {
        const auto ar = compute_approximant(F, n, m, {}, &profile);
        double sup = 0.0;
        for (int s = 0; s < 64; ++s) {
            sup = std::max(sup, std::abs(ar.Q(std::polar(1.0, two_pi * s / 64))));
        }
        sups.push_back(sup);
    }
    std::vector<double> sorted = sups;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double peak = sorted.back();
    CHECK(peak <= 10.0 * median);
}

TEST_CASE("degenerate vector functions are flagged, never fatal") {
    VectorFunctionSpec F;
    F.geometry = Geometry::disk(Complex(0.0), 1.0);
    F.components = {simple_poles({Complex(2.0)}), simple_poles({Complex(2.0)})};
    const MultiIndex m({1, 1});
    const auto profile = pole_profile(F, m);
    CHECK(!std::isfinite(profile.rho_m));
    REQUIRE(profile.poles.size() == 1);

    for (int n : {2, 6, 12}) {
        const auto ar = compute_approximant(F, n, m, {}, &profile);
        CHECK_FALSE(ar.unique);
    }
}

TEST_CASE("quadrature rho resolution") {
    const auto F = disk_d1_ensemble();
    QuadratureSettings quad;
    CHECK(std::abs(resolve_quadrature_rho(F, quad) - std::sqrt(2.0)) < 1e-14);
    quad.rho = 1.7;
    CHECK(resolve_quadrature_rho(F, quad) == 1.7);

    VectorFunctionSpec no_pole;
    no_pole.geometry = Geometry::disk(Complex(0.0), 1.0);
    no_pole.components = {ComponentFunction{{}, ComplexPolynomial{Complex(1.0)}}};
    CHECK_THROWS_AS(resolve_quadrature_rho(no_pole, QuadratureSettings{}), std::invalid_argument);
}
