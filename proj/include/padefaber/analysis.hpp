#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "padefaber/simpade.hpp"

namespace padefaber {

// Finite sample of a compact set K, with phi_sup = max(|Phi|, 1) over the
// samples (points of E count as 1).
struct CompactGrid {
    std::string name;
    std::vector<Complex> samples;
    double phi_sup{1.0};
};

inline CompactGrid make_compact_grid(std::string name, std::vector<Complex> samples, const Geometry& g) {
    if (samples.empty()) throw std::invalid_argument("make_compact_grid: empty sample set");
    CompactGrid grid{std::move(name), std::move(samples), 1.0};
    for (const Complex& z : grid.samples) {
        double a = 1.0;
        try {
            a = std::abs(g.phi(z));
        } catch (const std::domain_error&) {
            a = 1.0;  // inside E
        }
        // samples on E itself read |Phi| = 1 up to the branch-cut nudge,
        // which inflates to ~sqrt(nudge) at segment endpoints; snap those
        if (a < 1.0 + 1e-5) a = 1.0;
        grid.phi_sup = std::max(grid.phi_sup, a);
    }
    return grid;
}

// Ensures the grid sits inside D_{rho_m} and keeps clear of the poles; the
// clearance is measured in the Phi-plane.
inline void check_grid_against_profile(const CompactGrid& grid, const Geometry& g, const PoleProfile& profile,
                                       double min_phi_clearance = 1e-3) {
    if (std::isfinite(profile.rho_m) && !(grid.phi_sup < profile.rho_m)) {
        std::ostringstream os;
        os << "grid '" << grid.name << "': phi_sup = " << grid.phi_sup
           << " does not stay inside the canonical domain of index " << profile.rho_m;
        throw std::invalid_argument(os.str());
    }
    for (const Complex& z : grid.samples) {
        Complex phi_z;
        try {
            phi_z = g.phi(z);
        } catch (const std::domain_error&) {
            continue;  // inside E, every pole is outside
        }
        for (const auto& p : profile.poles) {
            const Complex phi_pole = g.phi(p.location);
            if (std::abs(phi_z - phi_pole) < min_phi_clearance) {
                std::ostringstream os;
                os << "grid '" << grid.name << "': sample (" << z.real() << "," << z.imag()
                   << ") is closer than " << min_phi_clearance << " to a pole in the Phi-plane";
                throw std::invalid_argument(os.str());
            }
        }
    }
}

struct RateFit {
    double rate{0.0};       // exp(least-squares slope of log e_n vs n)
    double secondary{0.0};  // max over the window of e_n^{1/n}
    int n_first{0};
    int n_last{0};
    int points{0};
};

// Geometric-rate fit of an error sequence. Entries outside [floor, cap] are
// excluded; at least 5 must survive.
inline RateFit fit_rate(const std::vector<std::pair<int, double>>& errors, double floor, double cap) {
    std::vector<std::pair<int, double>> kept;
    for (const auto& [n, e] : errors) {
        if (std::isfinite(e) && e >= floor && e <= cap) kept.emplace_back(n, e);
    }
    if (static_cast<int>(kept.size()) < 5) {
        std::ostringstream os;
        os << "fit_rate: only " << kept.size() << " errors inside [" << floor << ", " << cap
           << "]; need at least 5";
        throw std::domain_error(os.str());
    }
    double sn = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    RateFit fit;
    fit.n_first = kept.front().first;
    fit.n_last = kept.back().first;
    fit.points = static_cast<int>(kept.size());
    for (const auto& [n, e] : kept) {
        const double x = n, y = std::log(e);
        sn += 1; sx += x; sy += y; sxx += x * x; sxy += x * y;
        fit.secondary = std::max(fit.secondary, std::pow(e, 1.0 / n));
    }
    const double slope = (sn * sxy - sx * sy) / (sn * sxx - sx * sx);
    fit.rate = std::exp(slope);
    return fit;
}

// Matches computed denominator zeros to the true poles (expanded by
// multiplicity) by exhaustive minimum-cost assignment; returns the largest
// distance among the roots assigned to each distinct pole. Missing roots are
// padded with a far-away sentinel.
inline std::vector<double> match_poles(const std::vector<Complex>& roots, const PoleProfile& profile) {
    constexpr double kUnmatched = 1e30;
    const int total = profile.total_order();
    if (total > 8) throw std::invalid_argument("match_poles: factorial matching capped at |m| <= 8");

    std::vector<int> owner;      // expanded slot -> distinct pole index
    std::vector<Complex> slots;  // expanded pole locations
    for (std::size_t p = 0; p < profile.poles.size(); ++p) {
        for (int l = 0; l < profile.poles[p].order; ++l) {
            owner.push_back(static_cast<int>(p));
            slots.push_back(profile.poles[p].location);
        }
    }

    std::vector<Complex> padded = roots;
    while (static_cast<int>(padded.size()) < static_cast<int>(slots.size())) {
        padded.push_back(Complex(kUnmatched, 0.0));
    }

    std::vector<int> idx(padded.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end());

    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best = idx;
    do {
        double cost = 0.0;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            cost += std::abs(padded[static_cast<std::size_t>(idx[s])] - slots[s]);
            if (cost >= best_cost) break;
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = idx;
        }
    } while (std::next_permutation(idx.begin(), idx.end()));

    std::vector<double> dist(profile.poles.size(), 0.0);
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const double d = std::abs(padded[static_cast<std::size_t>(best[s])] - slots[s]);
        dist[static_cast<std::size_t>(owner[s])] = std::max(dist[static_cast<std::size_t>(owner[s])], d);
    }
    return dist;
}

struct DeltaResult {
    Complex value{0.0};
    double matrix_scale{0.0};  // largest entry magnitude
    int size{0};
    bool padded{false};  // pole multiplicities were raised to reach |m|
};

// Determinant of the polewise-independence system. Column group (j, t) and
// row group (alpha, s) hold
//
//   [ (z-lambda_j)^{tau_j} F_alpha(z) Phi^s(z) ]^{(t)} at z = lambda_j,
//
// each derivative evaluated through the Cauchy integral on |z-lambda_j| = eps
// by trapezoidal quadrature. A vanishing determinant exposes a nontrivial
// combination sum (v_alpha o Phi) F_alpha that cancels every pole.
//
// When F carries fewer than |m| poles the square system does not exist as
// such; multiplicities are then raised (nearest pole first) to |m|, which
// forces structurally dependent columns and a zero determinant, so the
// diagnostic still reads "degenerate".
inline DeltaResult polewise_independence_delta(const VectorFunctionSpec& F, const MultiIndex& m,
                                               const PoleProfile& profile, double eps = 0.0,
                                               int quadrature_points = 512) {
    if (m.size() != F.dimension()) {
        throw std::invalid_argument("polewise_independence_delta: dimension mismatch");
    }
    if (profile.poles.empty()) {
        throw std::invalid_argument("polewise_independence_delta: profile has no poles");
    }
    const int total = m.total();
    if (profile.total_order() > total) {
        throw std::invalid_argument("polewise_independence_delta: profile multiplicities exceed |m|");
    }

    std::vector<PoleInfo> poles = profile.poles;
    bool padded = false;
    {
        int have = profile.total_order();
        std::size_t next = 0;
        while (have < total) {
            poles[next].order += 1;
            ++have;
            padded = true;
            next = (next + 1) % poles.size();
        }
    }

    // eps default: a quarter of the smallest separation between any two
    // singularities of F, capped by the distance from each pole to E.
    const auto all_poles = F.vector_poles();
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all_poles.size(); ++i) {
        for (std::size_t j = i + 1; j < all_poles.size(); ++j) {
            sep = std::min(sep, std::abs(all_poles[i].location - all_poles[j].location));
        }
    }
    double to_boundary = std::numeric_limits<double>::infinity();
    for (const auto& p : poles) {
        to_boundary = std::min(to_boundary, F.geometry.distance_to_boundary(p.location));
    }
    if (!(eps > 0.0)) {
        eps = 0.25 * std::min(sep, to_boundary);
    } else {
        if (eps >= 0.5 * sep) {
            throw std::invalid_argument("polewise_independence_delta: eps circles overlap");
        }
        if (eps >= to_boundary) {
            throw std::invalid_argument("polewise_independence_delta: eps circle reaches E");
        }
    }

    // factorials up to |m|
    std::vector<double> fact(static_cast<std::size_t>(total) + 1, 1.0);
    for (int i = 1; i <= total; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;

    const int d = F.dimension();
    Eigen::MatrixXcd delta(total, total);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const int Nq = quadrature_points;

    int row = 0;
    for (int alpha = 0; alpha < d; ++alpha) {
        const int ma = m.orders[static_cast<std::size_t>(alpha)];
        for (int s = 0; s < ma; ++s, ++row) {
            int col = 0;
            for (const auto& pole : poles) {
                // samples of (z-lambda)^tau F_alpha(z) Phi^s(z) on the circle
                std::vector<Complex> g(static_cast<std::size_t>(Nq));
                for (int i = 0; i < Nq; ++i) {
                    const double th = two_pi * i / Nq;
                    const Complex dz = std::polar(eps, th);
                    const Complex z = pole.location + dz;
                    Complex v = F.components[static_cast<std::size_t>(alpha)].eval_as<Complex>(z);
                    Complex dzp(1.0);
                    for (int l = 0; l < pole.order; ++l) dzp *= dz;
                    v *= dzp;
                    if (s > 0) {
                        const Complex w = F.geometry.phi(z);
                        Complex wp(1.0);
                        for (int l = 0; l < s; ++l) wp *= w;
                        v *= wp;
                    }
                    g[static_cast<std::size_t>(i)] = v;
                }
                for (int t = 0; t < pole.order; ++t, ++col) {
                    Complex acc(0.0);
                    for (int i = 0; i < Nq; ++i) {
                        const double th = two_pi * i / Nq;
                        acc += g[static_cast<std::size_t>(i)] * std::polar(1.0, -t * th);
                    }
                    acc *= fact[static_cast<std::size_t>(t)] / (static_cast<double>(Nq) * std::pow(eps, t));
                    delta(row, col) = acc;
                }
            }
        }
    }

    DeltaResult out;
    out.size = total;
    out.padded = padded;
    out.matrix_scale = delta.cwiseAbs().maxCoeff();
    out.value = delta.determinant();
    return out;
}

struct TheoreticalBounds {
    double bound_24{0.0};  // ||Phi||_K / rho_m
    double bound_25{0.0};  // max_pole |Phi| / rho_m
    bool superlinear{false};
};

inline TheoreticalBounds theoretical_bounds(const PoleProfile& profile, const CompactGrid& K) {
    TheoreticalBounds b;
    if (!std::isfinite(profile.rho_m)) {
        b.superlinear = true;
        return b;
    }
    b.bound_24 = K.phi_sup / profile.rho_m;
    double max_phi = 0.0;
    for (const auto& p : profile.poles) max_phi = std::max(max_phi, p.abs_phi);
    b.bound_25 = max_phi / profile.rho_m;
    return b;
}

struct RowRecord {
    int n{0};
    std::vector<double> sup_err;   // per component, on the grid
    double q_coeff_err{std::numeric_limits<double>::quiet_NaN()};
    std::vector<double> pole_err;  // per distinct profile pole
    double sigma_min{std::numeric_limits<double>::quiet_NaN()};
    double sigma_second{std::numeric_limits<double>::quiet_NaN()};
    bool unique{false};
    bool failed{false};
    std::string failure;
    std::vector<Complex> q_coeffs;  // normalized denominator
};

struct RowSequenceReport {
    PoleProfile profile;
    std::vector<RowRecord> records;
    std::vector<std::optional<RateFit>> r_sup;   // per component
    std::optional<RateFit> r_q;
    std::vector<std::optional<RateFit>> r_pole;  // per distinct pole
    TheoreticalBounds bounds;
    int n_unique_onset{-1};  // first n from which `unique` holds to the end
};

struct RowOptions {
    double fit_floor{1e-12};
    double fit_cap{1e-1};
    SolveOptions solve{};
    int jobs{1};
};

namespace detail {

inline RowRecord row_record(const VectorFunctionSpec& F, const MultiIndex& m, int n, const CompactGrid& K,
                            const QuadratureSettings& quad, const PoleProfile& profile,
                            const FaberBasis& basis, const SolveOptions& solve) {
    RowRecord rec;
    rec.n = n;
    const int d = F.dimension();
    try {
        const ApproximantResult ar = compute_approximant(F, n, m, quad, &profile, &basis, solve);
        rec.sigma_min = ar.sigma_min;
        rec.sigma_second = ar.sigma_second;
        rec.unique = ar.unique;
        rec.q_coeffs = ar.Q.coeffs();

        rec.sup_err.assign(static_cast<std::size_t>(d), 0.0);
        for (int alpha = 0; alpha < d; ++alpha) {
            double sup = 0.0;
            for (const Complex& z : K.samples) {
                double e;
                try {
                    e = std::abs(F.components[static_cast<std::size_t>(alpha)].eval_as<Complex>(z) -
                                 evaluate_approximant(ar, alpha, z));
                } catch (const std::domain_error&) {
                    e = std::numeric_limits<double>::infinity();  // grid point hit a spurious zero of Q
                }
                sup = std::max(sup, e);
            }
            rec.sup_err[static_cast<std::size_t>(alpha)] = sup;
        }

        const int top = std::max(ar.Q.degree(), profile.Q_true.degree());
        double qe = 0.0;
        for (int k = 0; k <= top; ++k) qe = std::max(qe, std::abs(ar.Q.coeff(k) - profile.Q_true.coeff(k)));
        rec.q_coeff_err = qe;

        std::vector<Complex> roots;
        if (ar.Q.degree() >= 1) roots = polynomial_roots(ar.Q, solve.root_tol);
        rec.pole_err = match_poles(roots, profile);
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
        rec.sup_err.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
        rec.pole_err.assign(profile.poles.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return rec;
}

}  // namespace detail

// (Re)derives the fitted rates and the uniqueness onset from the per-n
// records. Also used to re-fit from a records table loaded off disk.
inline void fit_row_report(RowSequenceReport& report, double fit_floor, double fit_cap) {
    auto try_fit = [&](const std::vector<std::pair<int, double>>& e) -> std::optional<RateFit> {
        try {
            return fit_rate(e, fit_floor, fit_cap);
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    };

    const int d = report.records.empty() ? 0 : static_cast<int>(report.records.front().sup_err.size());
    report.r_sup.assign(static_cast<std::size_t>(d), std::nullopt);
    for (int alpha = 0; alpha < d; ++alpha) {
        std::vector<std::pair<int, double>> e;
        for (const auto& rec : report.records) {
            if (!rec.failed) e.emplace_back(rec.n, rec.sup_err[static_cast<std::size_t>(alpha)]);
        }
        report.r_sup[static_cast<std::size_t>(alpha)] = try_fit(e);
    }
    {
        std::vector<std::pair<int, double>> e;
        for (const auto& rec : report.records)
            if (!rec.failed) e.emplace_back(rec.n, rec.q_coeff_err);
        report.r_q = try_fit(e);
    }
    const std::size_t n_poles =
        report.records.empty() ? 0 : report.records.front().pole_err.size();
    report.r_pole.assign(n_poles, std::nullopt);
    for (std::size_t p = 0; p < n_poles; ++p) {
        std::vector<std::pair<int, double>> e;
        for (const auto& rec : report.records)
            if (!rec.failed) e.emplace_back(rec.n, rec.pole_err[p]);
        report.r_pole[p] = try_fit(e);
    }

    report.n_unique_onset = -1;
    for (int i = static_cast<int>(report.records.size()) - 1; i >= 0; --i) {
        const auto& rec = report.records[static_cast<std::size_t>(i)];
        if (rec.failed || !rec.unique) break;
        report.n_unique_onset = rec.n;
    }
}

// Runs the row n = n_first..n_last at fixed m: solves every approximant,
// measures sup errors over K, denominator coefficient error against the
// profile reference, matched pole distances, and fits geometric rates.
inline RowSequenceReport run_row_sequence(const VectorFunctionSpec& F, const MultiIndex& m, int n_first,
                                          int n_last, const CompactGrid& K,
                                          const QuadratureSettings& quad = {}, const RowOptions& opts = {}) {
    if (n_last < n_first) throw std::invalid_argument("run_row_sequence: empty n range");
    if (n_first < m.max_order()) throw std::invalid_argument("run_row_sequence: n_first below max_alpha m_alpha");
    F.validate();

    RowSequenceReport report;
    report.profile = pole_profile(F, m);
    check_grid_against_profile(K, F.geometry, report.profile);
    report.bounds = theoretical_bounds(report.profile, K);

    const FaberBasis basis = faber_basis(F.geometry, n_last - m.min_order());
    const int count = n_last - n_first + 1;
    report.records.assign(static_cast<std::size_t>(count), RowRecord{});

    const int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        for (int i = 0; i < count; ++i) {
            report.records[static_cast<std::size_t>(i)] =
                detail::row_record(F, m, n_first + i, K, quad, report.profile, basis, opts.solve);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const int i = next.fetch_add(1);
                    if (i >= count) return;
                    report.records[static_cast<std::size_t>(i)] =
                        detail::row_record(F, m, n_first + i, K, quad, report.profile, basis, opts.solve);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    fit_row_report(report, opts.fit_floor, opts.fit_cap);
    return report;
}

}  // namespace padefaber
