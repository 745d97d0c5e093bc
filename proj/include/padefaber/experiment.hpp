#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "padefaber/analysis.hpp"

namespace padefaber {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tolerances {
    double defect{1e-9};
    double degeneracy_ratio{1e6};
    double absolute_floor{1e-12};
    double fit_floor{1e-12};
    double fit_cap{1e-1};
    double noise_floor{1e-14};
    double grid_pole_clearance{1e-3};
    double root_residual{1e-10};
    double coeff_trim{1e-13};
};

struct ExperimentConfig {
    Geometry geometry{Geometry::disk(Complex(0.0), 1.0)};
    VectorFunctionSpec functions;
    MultiIndex m;
    int n_start{1};
    std::optional<int> n_end;
    QuadratureSettings quad;
    std::vector<CompactGrid> grids;  // grids[0] drives the sup-error column
    Tolerances tol;
    std::optional<double> delta_eps;
    std::string records_csv{"records.csv"};
    std::string summary_name{"summary.json"};
    bool dump_coefficients{false};
    std::uint64_t seed{0};

    json effective;  // fully defaulted echo; parsing it again is a fixed point
};

namespace cfg_detail {

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed) {
            if (it.key() == k) { ok = true; break; }
        }
        if (!ok) throw ConfigError("unknown key '" + path + "." + it.key() + "'");
    }
}

inline const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing required key '" + path + "." + key + "'");
    return *it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("'" + path + "' must be a number");
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
    return v.get<int>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError("'" + path + "' must be a boolean");
    return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError("'" + path + "' must be a string");
    return v.get<std::string>();
}

// complex numbers are written [re, im]; a bare number is taken as real
inline Complex as_complex(const json& v, const std::string& path) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return Complex(v[0].get<double>(), v[1].get<double>());
    }
    throw ConfigError("'" + path + "' must be a complex number [re, im]");
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Geometry parse_geometry(const json& jg, const std::string& path, json& echo) {
    if (!jg.is_object()) throw ConfigError("'" + path + "' must be an object");
    const std::string kind = as_string(require(jg, "kind", path), path + ".kind");
    if (kind == "disk") {
        reject_unknown(jg, {"kind", "center", "radius"}, path);
        const Complex center = jg.contains("center") ? as_complex(jg["center"], path + ".center") : Complex(0.0);
        const double radius = as_number(require(jg, "radius", path), path + ".radius");
        echo = {{"kind", "disk"}, {"center", complex_json(center)}, {"radius", radius}};
        return Geometry::disk(center, radius);
    }
    if (kind == "segment") {
        reject_unknown(jg, {"kind", "a", "b"}, path);
        const Complex a = as_complex(require(jg, "a", path), path + ".a");
        const Complex b = as_complex(require(jg, "b", path), path + ".b");
        echo = {{"kind", "segment"}, {"a", complex_json(a)}, {"b", complex_json(b)}};
        return Geometry::segment(a, b);
    }
    if (kind == "ellipse") {
        reject_unknown(jg, {"kind", "center", "rotation", "focal", "R"}, path);
        const Complex center = jg.contains("center") ? as_complex(jg["center"], path + ".center") : Complex(0.0);
        const double rotation = jg.contains("rotation") ? as_number(jg["rotation"], path + ".rotation") : 0.0;
        const double focal = as_number(require(jg, "focal", path), path + ".focal");
        const double R = as_number(require(jg, "R", path), path + ".R");
        echo = {{"kind", "ellipse"}, {"center", complex_json(center)}, {"rotation", rotation},
                {"focal", focal}, {"R", R}};
        return Geometry::ellipse(center, rotation, focal, R);
    }
    throw ConfigError("'" + path + ".kind' must be one of disk|segment|ellipse");
}

inline VectorFunctionSpec parse_functions(const json& jf, const Geometry& g, const std::string& path,
                                          json& echo) {
    if (!jf.is_array() || jf.empty()) throw ConfigError("'" + path + "' must be a non-empty array");
    VectorFunctionSpec F;
    F.geometry = g;
    echo = json::array();
    int ci = 0;
    for (const auto& jc : jf) {
        const std::string cpath = path + "[" + std::to_string(ci++) + "]";
        if (!jc.is_object()) throw ConfigError("'" + cpath + "' must be an object");
        reject_unknown(jc, {"principal_parts", "entire"}, cpath);
        ComponentFunction comp;
        json jpp_echo = json::array();
        if (jc.contains("principal_parts")) {
            const auto& jpp = jc["principal_parts"];
            if (!jpp.is_array()) throw ConfigError("'" + cpath + ".principal_parts' must be an array");
            int pi = 0;
            for (const auto& jp : jpp) {
                const std::string ppath = cpath + ".principal_parts[" + std::to_string(pi++) + "]";
                if (!jp.is_object()) throw ConfigError("'" + ppath + "' must be an object");
                reject_unknown(jp, {"pole", "order", "coefficients"}, ppath);
                PrincipalPart pp;
                pp.pole = as_complex(require(jp, "pole", ppath), ppath + ".pole");
                pp.order = jp.contains("order") ? as_int(jp["order"], ppath + ".order") : 1;
                const auto& jco = require(jp, "coefficients", ppath);
                if (!jco.is_array()) throw ConfigError("'" + ppath + ".coefficients' must be an array");
                int li = 0;
                for (const auto& jv : jco) {
                    pp.coefficients.push_back(
                        as_complex(jv, ppath + ".coefficients[" + std::to_string(li++) + "]"));
                }
                if (static_cast<int>(pp.coefficients.size()) != pp.order) {
                    throw ConfigError("'" + ppath + "': coefficients must have exactly `order` entries");
                }
                json jc_echo = json::array();
                for (const auto& c : pp.coefficients) jc_echo.push_back(complex_json(c));
                jpp_echo.push_back({{"pole", complex_json(pp.pole)}, {"order", pp.order},
                                    {"coefficients", jc_echo}});
                comp.principal_parts.push_back(std::move(pp));
            }
        }
        json je_echo = json::array();
        if (jc.contains("entire")) {
            const auto& je = jc["entire"];
            if (!je.is_array()) throw ConfigError("'" + cpath + ".entire' must be an array");
            std::vector<Complex> coeffs;
            int li = 0;
            for (const auto& jv : je) coeffs.push_back(as_complex(jv, cpath + ".entire[" + std::to_string(li++) + "]"));
            comp.entire = ComplexPolynomial(coeffs);
            for (const auto& c : comp.entire.coeffs()) je_echo.push_back(complex_json(c));
        }
        echo.push_back({{"principal_parts", jpp_echo}, {"entire", je_echo}});
        F.components.push_back(std::move(comp));
    }
    return F;
}

inline CompactGrid parse_grid(const json& jg, const Geometry& g, std::uint64_t seed, const std::string& path,
                              json& echo) {
    if (!jg.is_object()) throw ConfigError("'" + path + "' must be an object");
    const std::string type = as_string(require(jg, "type", path), path + ".type");
    const std::string name = jg.contains("name") ? as_string(jg["name"], path + ".name") : type;
    const int points = jg.contains("points") ? as_int(jg["points"], path + ".points") : 256;
    if (points < 1) throw ConfigError("'" + path + ".points' must be >= 1");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<Complex> samples;
    samples.reserve(static_cast<std::size_t>(points));

    if (type == "boundary") {
        reject_unknown(jg, {"type", "name", "points"}, path);
        for (int k = 0; k < points; ++k) samples.push_back(g.boundary_point(two_pi * k / points));
        echo = {{"name", name}, {"type", type}, {"points", points}};
    } else if (type == "segment") {
        reject_unknown(jg, {"type", "name", "points", "a", "b"}, path);
        const Complex a = as_complex(require(jg, "a", path), path + ".a");
        const Complex b = as_complex(require(jg, "b", path), path + ".b");
        if (points == 1) {
            samples.push_back((a + b) / 2.0);
        } else {
            for (int k = 0; k < points; ++k) {
                samples.push_back(a + (b - a) * (static_cast<double>(k) / (points - 1)));
            }
        }
        echo = {{"name", name}, {"type", type}, {"points", points}, {"a", complex_json(a)},
                {"b", complex_json(b)}};
    } else if (type == "circle") {
        reject_unknown(jg, {"type", "name", "points", "center", "radius"}, path);
        const Complex center = jg.contains("center") ? as_complex(jg["center"], path + ".center") : Complex(0.0);
        const double radius = as_number(require(jg, "radius", path), path + ".radius");
        for (int k = 0; k < points; ++k) samples.push_back(center + std::polar(radius, two_pi * k / points));
        echo = {{"name", name}, {"type", type}, {"points", points}, {"center", complex_json(center)},
                {"radius", radius}};
    } else if (type == "disk" || type == "random_disk") {
        reject_unknown(jg, {"type", "name", "points", "center", "radius"}, path);
        const Complex center = jg.contains("center") ? as_complex(jg["center"], path + ".center") : Complex(0.0);
        const double radius = as_number(require(jg, "radius", path), path + ".radius");
        if (type == "disk") {
            // sunflower layout: deterministic, roughly uniform
            constexpr double golden = 2.399963229728653;
            for (int k = 0; k < points; ++k) {
                const double r = radius * std::sqrt((k + 0.5) / points);
                samples.push_back(center + std::polar(r, golden * k));
            }
        } else {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (int k = 0; k < points; ++k) {
                const double r = radius * std::sqrt(unit(rng));
                const double th = two_pi * unit(rng);
                samples.push_back(center + std::polar(r, th));
            }
        }
        echo = {{"name", name}, {"type", type}, {"points", points}, {"center", complex_json(center)},
                {"radius", radius}};
    } else if (type == "rectangle") {
        reject_unknown(jg, {"type", "name", "points", "corner_a", "corner_b"}, path);
        const Complex a = as_complex(require(jg, "corner_a", path), path + ".corner_a");
        const Complex b = as_complex(require(jg, "corner_b", path), path + ".corner_b");
        const int side = std::max(2, static_cast<int>(std::lround(std::sqrt(static_cast<double>(points)))));
        for (int i = 0; i < side; ++i) {
            for (int j = 0; j < side; ++j) {
                const double fx = static_cast<double>(i) / (side - 1);
                const double fy = static_cast<double>(j) / (side - 1);
                samples.push_back(Complex(a.real() + fx * (b.real() - a.real()),
                                          a.imag() + fy * (b.imag() - a.imag())));
            }
        }
        echo = {{"name", name}, {"type", type}, {"points", points}, {"corner_a", complex_json(a)},
                {"corner_b", complex_json(b)}};
    } else if (type == "level_band") {
        reject_unknown(jg, {"type", "name", "points", "r"}, path);
        const double r = as_number(require(jg, "r", path), path + ".r");
        if (!(r > 1.0)) throw ConfigError("'" + path + ".r' must be > 1");
        const int rings = std::max(2, static_cast<int>(std::lround(std::sqrt(points / 8.0))) + 1);
        const int per_ring = std::max(1, points / rings);
        for (int i = 0; i < rings; ++i) {
            const double rho = 1.0 + (r - 1.0) * i / (rings - 1);
            for (int k = 0; k < per_ring; ++k) {
                const double th = two_pi * k / per_ring;
                samples.push_back(rho <= 1.0 ? g.boundary_point(th) : g.psi(std::polar(rho, th)));
            }
        }
        echo = {{"name", name}, {"type", type}, {"points", points}, {"r", r}};
    } else {
        throw ConfigError("'" + path + ".type' unknown grid type '" + type + "'");
    }

    return make_compact_grid(name, std::move(samples), g);
}

}  // namespace cfg_detail

// Parses and fully validates an experiment description. Every default is
// materialized into `effective`, whose serialization parses back to an
// identical configuration.
inline ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not well-formed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    cfg_detail::reject_unknown(root,
                               {"geometry", "functions", "m", "n", "quadrature", "grids", "tolerances",
                                "delta", "output", "seed"},
                               "config");

    ExperimentConfig cfg;
    json echo;

    json geo_echo;
    cfg.geometry = cfg_detail::parse_geometry(cfg_detail::require(root, "geometry", "config"),
                                              "config.geometry", geo_echo);
    echo["geometry"] = geo_echo;

    json fn_echo;
    cfg.functions = cfg_detail::parse_functions(cfg_detail::require(root, "functions", "config"),
                                                cfg.geometry, "config.functions", fn_echo);
    echo["functions"] = fn_echo;
    try {
        cfg.functions.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.functions: ") + e.what());
    }

    {
        const json& jm = cfg_detail::require(root, "m", "config");
        if (!jm.is_array() || jm.empty()) throw ConfigError("'config.m' must be a non-empty integer array");
        std::vector<int> m;
        int i = 0;
        for (const auto& v : jm) m.push_back(cfg_detail::as_int(v, "config.m[" + std::to_string(i++) + "]"));
        try {
            cfg.m = MultiIndex(m);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.m: ") + e.what() +
                              " (the multi-index must lie in N^d with at least one positive entry)");
        }
        if (cfg.m.size() != cfg.functions.dimension()) {
            throw ConfigError("'config.m' length must equal the number of function components");
        }
        echo["m"] = jm;
    }

    cfg.seed = 0;
    if (root.contains("seed")) {
        const auto& js = root["seed"];
        if (!js.is_number_unsigned() && !js.is_number_integer()) throw ConfigError("'config.seed' must be an integer");
        cfg.seed = js.get<std::uint64_t>();
    }
    echo["seed"] = cfg.seed;

    cfg.n_start = cfg.m.max_order();
    if (root.contains("n")) {
        const auto& jn = root["n"];
        if (!jn.is_object()) throw ConfigError("'config.n' must be an object");
        cfg_detail::reject_unknown(jn, {"start", "end"}, "config.n");
        if (jn.contains("start")) cfg.n_start = cfg_detail::as_int(jn["start"], "config.n.start");
        if (jn.contains("end")) cfg.n_end = cfg_detail::as_int(jn["end"], "config.n.end");
    }
    if (cfg.n_start < cfg.m.max_order()) {
        throw ConfigError("'config.n.start' must be >= max_alpha m_alpha");
    }
    if (cfg.n_end && *cfg.n_end < cfg.n_start) throw ConfigError("'config.n.end' must be >= start");
    echo["n"]["start"] = cfg.n_start;
    if (cfg.n_end) echo["n"]["end"] = *cfg.n_end;

    if (root.contains("quadrature")) {
        const auto& jq = root["quadrature"];
        if (!jq.is_object()) throw ConfigError("'config.quadrature' must be an object");
        cfg_detail::reject_unknown(jq, {"rho", "N", "residual_buffer"}, "config.quadrature");
        if (jq.contains("rho") && !jq["rho"].is_null()) {
            cfg.quad.rho = cfg_detail::as_number(jq["rho"], "config.quadrature.rho");
            if (!(cfg.quad.rho > 1.0)) throw ConfigError("'config.quadrature.rho' must be > 1");
        }
        if (jq.contains("N")) cfg.quad.N = cfg_detail::as_int(jq["N"], "config.quadrature.N");
        if (jq.contains("residual_buffer")) {
            cfg.quad.residual_buffer = cfg_detail::as_int(jq["residual_buffer"], "config.quadrature.residual_buffer");
        }
        if (cfg.quad.N < 4) throw ConfigError("'config.quadrature.N' must be >= 4");
        if (cfg.quad.residual_buffer < 0) throw ConfigError("'config.quadrature.residual_buffer' must be >= 0");
    }
    if (cfg.quad.rho > 1.0) echo["quadrature"]["rho"] = cfg.quad.rho;
    echo["quadrature"]["N"] = cfg.quad.N;
    echo["quadrature"]["residual_buffer"] = cfg.quad.residual_buffer;

    // quadrature rho must be resolvable and the explicit row must fit under
    // the anti-aliasing bound
    try {
        resolve_quadrature_rho(cfg.functions, cfg.quad);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.quadrature: ") + e.what());
    }
    if (cfg.n_end) {
        const int need = 2 * (*cfg.n_end + cfg.quad.residual_buffer + 1);
        if (cfg.quad.N < need) {
            throw ConfigError("'config.quadrature.N' = " + std::to_string(cfg.quad.N) +
                              " is below the anti-aliasing bound " + std::to_string(need) +
                              " for n.end = " + std::to_string(*cfg.n_end));
        }
    }

    json grids_echo = json::array();
    if (root.contains("grids")) {
        const auto& jg = root["grids"];
        if (!jg.is_array() || jg.empty()) throw ConfigError("'config.grids' must be a non-empty array");
        int gi = 0;
        for (const auto& item : jg) {
            json one;
            cfg.grids.push_back(cfg_detail::parse_grid(item, cfg.geometry, cfg.seed,
                                                       "config.grids[" + std::to_string(gi++) + "]", one));
            grids_echo.push_back(one);
        }
    } else {
        json one;
        cfg.grids.push_back(cfg_detail::parse_grid(json{{"type", "boundary"}, {"name", "E"}}, cfg.geometry,
                                                   cfg.seed, "config.grids[0]", one));
        grids_echo.push_back(one);
    }
    echo["grids"] = grids_echo;

    if (root.contains("tolerances")) {
        const auto& jt = root["tolerances"];
        if (!jt.is_object()) throw ConfigError("'config.tolerances' must be an object");
        cfg_detail::reject_unknown(jt,
                                   {"defect", "degeneracy_ratio", "absolute_floor", "fit_floor", "fit_cap",
                                    "noise_floor", "grid_pole_clearance", "root_residual", "coeff_trim"},
                                   "config.tolerances");
        auto opt = [&](const char* k, double& target) {
            if (jt.contains(k)) {
                target = cfg_detail::as_number(jt[k], std::string("config.tolerances.") + k);
                if (!(target > 0.0)) throw ConfigError(std::string("'config.tolerances.") + k + "' must be > 0");
            }
        };
        opt("defect", cfg.tol.defect);
        opt("degeneracy_ratio", cfg.tol.degeneracy_ratio);
        opt("absolute_floor", cfg.tol.absolute_floor);
        opt("fit_floor", cfg.tol.fit_floor);
        opt("fit_cap", cfg.tol.fit_cap);
        opt("noise_floor", cfg.tol.noise_floor);
        opt("grid_pole_clearance", cfg.tol.grid_pole_clearance);
        opt("root_residual", cfg.tol.root_residual);
        opt("coeff_trim", cfg.tol.coeff_trim);
    }
    echo["tolerances"] = {{"defect", cfg.tol.defect},
                          {"degeneracy_ratio", cfg.tol.degeneracy_ratio},
                          {"absolute_floor", cfg.tol.absolute_floor},
                          {"fit_floor", cfg.tol.fit_floor},
                          {"fit_cap", cfg.tol.fit_cap},
                          {"noise_floor", cfg.tol.noise_floor},
                          {"grid_pole_clearance", cfg.tol.grid_pole_clearance},
                          {"root_residual", cfg.tol.root_residual},
                          {"coeff_trim", cfg.tol.coeff_trim}};

    if (root.contains("delta")) {
        const auto& jd = root["delta"];
        if (!jd.is_object()) throw ConfigError("'config.delta' must be an object");
        cfg_detail::reject_unknown(jd, {"eps"}, "config.delta");
        if (jd.contains("eps") && !jd["eps"].is_null()) {
            cfg.delta_eps = cfg_detail::as_number(jd["eps"], "config.delta.eps");
            if (!(*cfg.delta_eps > 0.0)) throw ConfigError("'config.delta.eps' must be > 0");
        }
    }
    if (cfg.delta_eps) echo["delta"]["eps"] = *cfg.delta_eps;

    if (root.contains("output")) {
        const auto& jo = root["output"];
        if (!jo.is_object()) throw ConfigError("'config.output' must be an object");
        cfg_detail::reject_unknown(jo, {"records_csv", "summary", "dump_coefficients"}, "config.output");
        if (jo.contains("records_csv")) cfg.records_csv = cfg_detail::as_string(jo["records_csv"], "config.output.records_csv");
        if (jo.contains("summary")) cfg.summary_name = cfg_detail::as_string(jo["summary"], "config.output.summary");
        if (jo.contains("dump_coefficients")) {
            cfg.dump_coefficients = cfg_detail::as_bool(jo["dump_coefficients"], "config.output.dump_coefficients");
        }
    }
    echo["output"] = {{"records_csv", cfg.records_csv},
                      {"summary", cfg.summary_name},
                      {"dump_coefficients", cfg.dump_coefficients}};

    cfg.effective = std::move(echo);
    return cfg;
}

namespace cfg_detail {

inline std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json number_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline json fit_json(const std::optional<RateFit>& f) {
    if (!f) return nullptr;
    return json{{"rate", f->rate},
                {"secondary_max_nth_root", f->secondary},
                {"window", json::array({f->n_first, f->n_last})},
                {"points", f->points}};
}

}  // namespace cfg_detail

inline void write_records_csv(const std::string& path, const RowSequenceReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    const std::size_t n_poles = report.profile.poles.size();
    out << "n,alpha,sup_err,q_coeff_err";
    for (std::size_t p = 1; p <= n_poles; ++p) out << ",pole_err_" << p;
    out << ",sigma_min,sigma_second,unique\n";
    for (const auto& rec : report.records) {
        for (std::size_t alpha = 0; alpha < rec.sup_err.size(); ++alpha) {
            out << rec.n << ',' << (alpha + 1) << ',' << cfg_detail::fmt17(rec.sup_err[alpha]) << ','
                << cfg_detail::fmt17(rec.q_coeff_err);
            for (std::size_t p = 0; p < n_poles; ++p) {
                out << ',' << cfg_detail::fmt17(p < rec.pole_err.size()
                                                    ? rec.pole_err[p]
                                                    : std::numeric_limits<double>::quiet_NaN());
            }
            out << ',' << cfg_detail::fmt17(rec.sigma_min) << ',' << cfg_detail::fmt17(rec.sigma_second) << ','
                << (rec.unique ? 1 : 0) << '\n';
        }
    }
}

// Reads a records table back; only the columns needed for re-fitting are
// reconstructed.
inline RowSequenceReport read_records_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("'" + path + "': empty file");

    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    std::size_t n_poles = 0;
    for (const auto& c : cols)
        if (c.rfind("pole_err_", 0) == 0) ++n_poles;
    const std::size_t expected = 6 + n_poles + 1;
    if (cols.size() != expected) throw std::runtime_error("'" + path + "': unexpected column layout");

    RowSequenceReport report;
    report.profile.poles.resize(n_poles);  // locations unknown; only the count matters for refits
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> f;
        std::string c;
        while (std::getline(ss, c, ',')) f.push_back(c);
        if (f.size() != expected) throw std::runtime_error("'" + path + "': malformed row '" + line + "'");
        const int n = std::stoi(f[0]);
        const int alpha = std::stoi(f[1]);
        if (report.records.empty() || report.records.back().n != n) {
            RowRecord rec;
            rec.n = n;
            rec.q_coeff_err = std::strtod(f[3].c_str(), nullptr);
            for (std::size_t p = 0; p < n_poles; ++p) rec.pole_err.push_back(std::strtod(f[4 + p].c_str(), nullptr));
            rec.sigma_min = std::strtod(f[4 + n_poles].c_str(), nullptr);
            rec.sigma_second = std::strtod(f[5 + n_poles].c_str(), nullptr);
            rec.unique = f[6 + n_poles] == "1";
            rec.failed = std::isnan(rec.q_coeff_err) && std::isnan(rec.sigma_min);
            report.records.push_back(std::move(rec));
        }
        auto& rec = report.records.back();
        if (static_cast<int>(rec.sup_err.size()) < alpha) rec.sup_err.resize(static_cast<std::size_t>(alpha));
        rec.sup_err[static_cast<std::size_t>(alpha - 1)] = std::strtod(f[2].c_str(), nullptr);
    }
    return report;
}

struct RunResult {
    int exit_code{0};
    RowSequenceReport report;
    json summary;
};

namespace cfg_detail {

inline json summary_json(const ExperimentConfig& cfg, const RowSequenceReport& report, int n_end_used,
                         const std::optional<DeltaResult>& delta, const std::string& delta_error,
                         const std::string& status) {
    json s;
    s["status"] = status;
    s["ensemble"] = {{"components", cfg.functions.dimension()},
                     {"m", cfg.m.orders},
                     {"n_start", cfg.n_start},
                     {"n_end", n_end_used},
                     {"rho_m", number_or_null(report.profile.rho_m)},
                     {"L", report.profile.L},
                     {"quadrature_rho", resolve_quadrature_rho(cfg.functions, cfg.quad)},
                     {"quadrature_N", cfg.quad.N}};
    json qt = json::array();
    for (const auto& c : report.profile.Q_true.coeffs()) qt.push_back(complex_json(c));
    s["ensemble"]["q_true"] = qt;

    s["bounds"] = {{"grid", cfg.grids.front().name},
                   {"bound_24", report.bounds.bound_24},
                   {"bound_25", report.bounds.bound_25},
                   {"superlinear", report.bounds.superlinear}};
    json per_grid = json::object();
    for (const auto& gr : cfg.grids) {
        per_grid[gr.name] = theoretical_bounds(report.profile, gr).bound_24;
    }
    s["bounds"]["bound_24_per_grid"] = per_grid;

    json rsup = json::array();
    for (const auto& f : report.r_sup) rsup.push_back(fit_json(f));
    json rpole = json::array();
    for (const auto& f : report.r_pole) rpole.push_back(fit_json(f));
    s["fits"] = {{"r_q", fit_json(report.r_q)}, {"r_sup", rsup}, {"r_pole", rpole}};

    if (delta) {
        s["delta"] = {{"value", complex_json(delta->value)},
                      {"abs", std::abs(delta->value)},
                      {"matrix_scale", delta->matrix_scale},
                      {"relative", delta->matrix_scale > 0.0 ? std::abs(delta->value) / delta->matrix_scale : 0.0},
                      {"size", delta->size},
                      {"padded", delta->padded}};
    } else {
        s["delta"] = {{"error", delta_error}};
    }

    s["unique_onset_n"] = report.n_unique_onset;
    int failed = 0;
    for (const auto& rec : report.records)
        if (rec.failed) ++failed;
    s["degenerate_rows"] = failed;
    return s;
}

}  // namespace cfg_detail

// Executes a validated config: row sequence, rate fits, the independence
// determinant, and the machine-readable outputs (CSV table, JSON summary,
// effective-config echo, optional coefficient dump).
inline RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs = 1,
                                bool verbose = false, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    RunResult result;

    auto say = [&](const std::string& msg) {
        if (verbose && log != nullptr) (*log) << msg << '\n';
    };

    fs::create_directories(out_dir);

    RowOptions opts;
    opts.fit_floor = cfg.tol.fit_floor;
    opts.fit_cap = cfg.tol.fit_cap;
    opts.solve.degeneracy_ratio = cfg.tol.degeneracy_ratio;
    opts.solve.absolute_floor = cfg.tol.absolute_floor;
    opts.solve.root_tol = cfg.tol.root_residual;
    opts.solve.coeff_trim = cfg.tol.coeff_trim;
    opts.jobs = jobs;

    int n_end = 0;
    if (cfg.n_end) {
        n_end = *cfg.n_end;
    } else {
        // default row length: stop once two consecutive rows sit at the error
        // floor, capped by the anti-aliasing bound of the configured N
        n_end = std::min(cfg.n_start + 64, cfg.quad.N / 2 - cfg.quad.residual_buffer - 2);
    }
    say("row sequence n = " + std::to_string(cfg.n_start) + ".." + std::to_string(n_end));

    result.report = run_row_sequence(cfg.functions, cfg.m, cfg.n_start, n_end, cfg.grids.front(), cfg.quad, opts);

    if (!cfg.n_end) {
        // truncate after the first two consecutive floor hits
        int cut = -1, consecutive = 0;
        for (std::size_t i = 0; i < result.report.records.size(); ++i) {
            const auto& rec = result.report.records[i];
            double emax = 0.0;
            for (double e : rec.sup_err) emax = std::max(emax, e);
            consecutive = (!rec.failed && emax < cfg.tol.fit_floor) ? consecutive + 1 : 0;
            if (consecutive >= 2) {
                cut = static_cast<int>(i);
                break;
            }
        }
        if (cut >= 0) {
            result.report.records.resize(static_cast<std::size_t>(cut) + 1);
            n_end = result.report.records.back().n;
            fit_row_report(result.report, cfg.tol.fit_floor, cfg.tol.fit_cap);
            say("row truncated at n = " + std::to_string(n_end) + " (two consecutive rows at the error floor)");
        }
    }

    std::optional<DeltaResult> delta;
    std::string delta_error;
    try {
        delta = polewise_independence_delta(cfg.functions, cfg.m, result.report.profile,
                                            cfg.delta_eps.value_or(0.0));
    } catch (const std::exception& e) {
        delta_error = e.what();
        say(std::string("delta diagnostic unavailable: ") + e.what());
    }

    const fs::path base(out_dir);
    write_records_csv((base / cfg.records_csv).string(), result.report);

    {
        std::ofstream out(base / "effective_config.json", std::ios::binary);
        out << cfg.effective.dump(2) << '\n';
    }
    if (cfg.dump_coefficients) {
        std::ofstream out(base / "q_coeffs.csv", std::ios::binary);
        out << "n,k,re,im\n";
        for (const auto& rec : result.report.records) {
            for (std::size_t k = 0; k < rec.q_coeffs.size(); ++k) {
                out << rec.n << ',' << k << ',' << cfg_detail::fmt17(rec.q_coeffs[k].real()) << ','
                    << cfg_detail::fmt17(rec.q_coeffs[k].imag()) << '\n';
            }
        }
    }

    result.summary = cfg_detail::summary_json(cfg, result.report, n_end, delta, delta_error, "ok");
    {
        std::ofstream out(base / cfg.summary_name, std::ios::binary);
        out << result.summary.dump(2) << '\n';
    }
    say("wrote " + (base / cfg.records_csv).string() + ", " + (base / cfg.summary_name).string());
    result.exit_code = 0;
    return result;
}

// `report` verb: re-fit rates from an existing records table, recomputing
// only the cheap theoretical bounds from the config.
inline json refit_report(const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path base(out_dir);
    RowSequenceReport report = read_records_csv((base / cfg.records_csv).string());

    report.profile = pole_profile(cfg.functions, cfg.m);
    report.bounds = theoretical_bounds(report.profile, cfg.grids.front());
    fit_row_report(report, cfg.tol.fit_floor, cfg.tol.fit_cap);

    const int n_end_used = report.records.empty() ? cfg.n_start : report.records.back().n;
    json summary = cfg_detail::summary_json(cfg, report, n_end_used, std::nullopt,
                                            "not recomputed by report verb", "ok");
    std::ofstream out(base / "report.json", std::ios::binary);
    out << summary.dump(2) << '\n';
    return summary;
}

}  // namespace padefaber
