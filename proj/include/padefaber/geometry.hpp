#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "padefaber/detail/extended.hpp"

namespace padefaber {

using Complex = std::complex<double>;

enum class GeometryKind { Disk, Segment, Ellipse };

inline const char* to_string(GeometryKind k) {
    switch (k) {
        case GeometryKind::Disk: return "disk";
        case GeometryKind::Segment: return "segment";
        case GeometryKind::Ellipse: return "ellipse";
    }
    return "?";
}

struct LevelCurveNode {
    Complex t;  // point on Gamma_rho
    Complex w;  // rho * e^{i theta}, with Phi(t) = w
};

// Compact set E together with its exterior conformal map.
//
// Every supported set is an affine image z = a*zeta + b of a canonical set
// (unit disk, [-1,1], or the ellipse traced by (R v + 1/(R v))/2 on |v|=1).
// With u = a/|a|, the normalized exterior map is
//
//   Phi(z) = u * Phi0((z - b)/a),   Psi(w) = a * Psi0(w/u) + b,
//
// which keeps Phi'(infinity) real and positive. The Laurent data of Psi at
// infinity (c_{-1} w + c_0 + c_1/w) is exact and finite for all three kinds.
class Geometry {
public:
    Geometry() : Geometry(disk(Complex(0.0), 1.0)) {}  // unit disk

    static Geometry disk(Complex center, double radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("disk: radius must be > 0");
        Geometry g{Uninit{}};
        g.kind_ = GeometryKind::Disk;
        g.a_ = Complex(radius, 0.0);
        g.b_ = center;
        g.u_ = Complex(1.0, 0.0);
        g.lead_ = radius;
        g.tail_ = {center, Complex(0.0)};
        return g;
    }

    static Geometry segment(Complex a, Complex b) {
        if (a == b) throw std::invalid_argument("segment: endpoints must differ");
        Geometry g{Uninit{}};
        g.kind_ = GeometryKind::Segment;
        const Complex mid = (a + b) / 2.0;
        const Complex half = (b - a) / 2.0;
        g.a_ = half;
        g.b_ = mid;
        g.u_ = half / std::abs(half);
        g.lead_ = std::abs(half) / 2.0;
        g.tail_ = {mid, half * half / (2.0 * std::abs(half))};
        return g;
    }

    // Semi-axes focal*(R +- 1/R)/2, rotated and shifted.
    static Geometry ellipse(Complex center, double rotation, double focal, double R) {
        if (!(focal > 0.0)) throw std::invalid_argument("ellipse: focal half-distance must be > 0");
        if (!(R > 1.0)) throw std::invalid_argument("ellipse: parameter R must be > 1");
        Geometry g{Uninit{}};
        g.kind_ = GeometryKind::Ellipse;
        g.a_ = std::polar(focal, rotation);
        g.b_ = center;
        g.u_ = std::polar(1.0, rotation);
        g.R_ = R;
        g.lead_ = focal * R / 2.0;
        g.tail_ = {center, g.a_ * g.u_ / (2.0 * R)};
        return g;
    }

    GeometryKind kind() const { return kind_; }

    // Laurent data of Psi: element 0 is c_{-1} (= 1/Phi'(inf) > 0), element
    // k+1 is c_k.
    std::vector<Complex> laurent() const {
        std::vector<Complex> out;
        out.push_back(Complex(lead_, 0.0));
        out.insert(out.end(), tail_.begin(), tail_.end());
        return out;
    }

    double capacity() const { return lead_; }  // c_{-1}

    Complex laurent_c(int k) const {
        if (k < 0 || k >= static_cast<int>(tail_.size())) return Complex(0.0);
        return tail_[static_cast<std::size_t>(k)];
    }

    int laurent_tail_length() const { return static_cast<int>(tail_.size()); }

    Complex phi(Complex z) const {
        const Complex w = u_ * phi0(canonical(z));
        if (std::abs(w) < 1.0 - 1e-9) {
            throw std::domain_error("phi: point lies inside E (|Phi(z)| < 1)");
        }
        return w;
    }

    Complex phi_prime(Complex z) const {
        const Complex raw = (z - b_) / a_;
        if (kind_ == GeometryKind::Segment && std::abs(raw.imag()) < 1e-13 &&
            std::abs(raw.real()) <= 1.0 + 1e-13) {
            throw std::domain_error("phi_prime: point lies on E (the segment)");
        }
        const Complex zeta = canonical(z);
        const Complex w = u_ * phi0(zeta);
        if (std::abs(w) < 1.0 + 1e-12) {
            throw std::domain_error("phi_prime: point lies on or inside E");
        }
        Complex d0;
        switch (kind_) {
            case GeometryKind::Disk: d0 = Complex(1.0); break;
            case GeometryKind::Segment: d0 = 1.0 + zeta / sqrt_cut(zeta); break;
            case GeometryKind::Ellipse: d0 = (1.0 + zeta / sqrt_cut(zeta)) / R_; break;
        }
        return u_ * d0 / a_;
    }

    Complex psi(Complex w) const {
        if (!(std::abs(w) > 1.0)) throw std::domain_error("psi: |w| must be > 1");
        return psi_any(w);
    }

    Complex psi_prime(Complex w) const {
        if (!(std::abs(w) > 1.0)) throw std::domain_error("psi_prime: |w| must be > 1");
        const Complex v = w / u_;
        Complex d0;
        switch (kind_) {
            case GeometryKind::Disk: d0 = Complex(1.0); break;
            case GeometryKind::Segment: d0 = (1.0 - 1.0 / (v * v)) / 2.0; break;
            case GeometryKind::Ellipse: d0 = (R_ - 1.0 / (R_ * v * v)) / 2.0; break;
        }
        return a_ * d0 / u_;
    }

    // Psi extended to |w| = 1: parameterizes the boundary of E.
    Complex boundary_point(double theta) const {
        return psi_any(std::polar(1.0, theta));
    }

    // Psi in caller-chosen complex arithmetic; no domain checks. Used by the
    // quadrature engines (long double and __float128 node generation).
    template <class C>
    C psi_as(C w) const {
        const C v = w / C(u_);
        C z0;
        switch (kind_) {
            case GeometryKind::Disk: z0 = v; break;
            case GeometryKind::Segment: z0 = (v + C(1.0) / v) * C(0.5); break;
            case GeometryKind::Ellipse: {
                const C rv = v * C(R_);
                z0 = (rv + C(1.0) / rv) * C(0.5);
                break;
            }
        }
        return C(a_) * z0 + C(b_);
    }

    std::vector<LevelCurveNode> level_curve_nodes(double rho, int N) const {
        if (!(rho > 1.0)) throw std::invalid_argument("level_curve_nodes: rho must be > 1");
        if (N < 1) throw std::invalid_argument("level_curve_nodes: N must be >= 1");
        std::vector<LevelCurveNode> nodes(static_cast<std::size_t>(N));
        using CL = std::complex<long double>;
        constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
        for (int s = 0; s < N; ++s) {
            const long double th = two_pi * s / N;
            const CL w = static_cast<long double>(rho) * CL(std::cos(th), std::sin(th));
            const CL t = psi_as<CL>(w);
            nodes[static_cast<std::size_t>(s)] = {
                Complex(static_cast<double>(t.real()), static_cast<double>(t.imag())),
                Complex(static_cast<double>(w.real()), static_cast<double>(w.imag()))};
        }
        return nodes;
    }

    // Distance from z to the boundary of E, estimated over a boundary sample.
    double distance_to_boundary(Complex z, int samples = 512) const {
        double best = std::numeric_limits<double>::infinity();
        constexpr double two_pi = 2.0 * std::numbers::pi;
        for (int s = 0; s < samples; ++s) {
            best = std::min(best, std::abs(z - boundary_point(two_pi * s / samples)));
        }
        return best;
    }

    // Descriptive parameters (for config echo and diagnostics).
    Complex affine_scale() const { return a_; }
    Complex affine_shift() const { return b_; }
    double ellipse_R() const { return R_; }

private:
    struct Uninit {};
    explicit Geometry(Uninit) {}

    Complex canonical(Complex z) const {
        Complex zeta = (z - b_) / a_;
        if (kind_ != GeometryKind::Disk) {
            // Deterministic handling of points on or next to the branch cut
            // [-1,1]: push them off by a fixed 1e-12 in the normal direction.
            if (std::abs(zeta.imag()) < 1e-13 && std::abs(zeta.real()) <= 1.0 + 1e-13) {
                zeta.imag(zeta.imag() >= 0.0 ? 1e-12 : -1e-12);
            }
        }
        return zeta;
    }

    // sqrt(zeta^2 - 1) with the cut exactly on [-1,1] and ~zeta at infinity.
    static Complex sqrt_cut(Complex zeta) {
        return std::sqrt(zeta - 1.0) * std::sqrt(zeta + 1.0);
    }

    Complex phi0(Complex zeta) const {
        switch (kind_) {
            case GeometryKind::Disk: return zeta;
            case GeometryKind::Segment: return zeta + sqrt_cut(zeta);
            case GeometryKind::Ellipse: return (zeta + sqrt_cut(zeta)) / R_;
        }
        return zeta;
    }

    Complex psi_any(Complex w) const { return psi_as<Complex>(w); }

    GeometryKind kind_{GeometryKind::Disk};
    Complex a_{1.0, 0.0};  // affine scale (canonical -> actual)
    Complex b_{0.0, 0.0};  // affine shift
    Complex u_{1.0, 0.0};  // a/|a|
    double R_{0.0};        // ellipse parameter
    double lead_{1.0};     // c_{-1}
    std::vector<Complex> tail_;  // c_0, c_1, ...
};

}  // namespace padefaber
