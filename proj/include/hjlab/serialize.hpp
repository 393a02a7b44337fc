#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hjlab/error.hpp"
#include "hjlab/evolve.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"
#include "hjlab/synth.hpp"
#include "hjlab/verify.hpp"

namespace hjlab {

using json = nlohmann::ordered_json;

namespace io {

/// Strict view of one JSON object: rejects keys outside `allowed` and names
/// the offending path in every error.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            fail(ErrorCode::ConfigParse, path_ + ": expected an object");
        }
        for (const auto& item : j_.items()) {
            if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
                fail(ErrorCode::ConfigParse, path_ + "." + item.key() + ": unknown key");
            }
        }
    }

    bool has(std::string_view key) const { return j_.contains(key); }
    std::string path(std::string_view key) const { return path_ + "." + std::string(key); }

    const json& at(std::string_view key) const {
        if (!has(key)) {
            fail(ErrorCode::ConfigParse, path(key) + ": missing required key");
        }
        return j_.at(std::string(key));
    }

    double number(std::string_view key) const {
        const json& v = at(key);
        if (!v.is_number()) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected a finite number");
        }
        return d;
    }

    double number(std::string_view key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::size_t count(std::string_view key) const {
        const json& v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected a nonnegative integer");
        }
        return v.get<std::size_t>();
    }

    std::size_t count(std::string_view key, std::size_t fallback) const {
        return has(key) ? count(key) : fallback;
    }

    int integer(std::string_view key) const {
        const json& v = at(key);
        if (!v.is_number_integer()) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected an integer");
        }
        return v.get<int>();
    }

    std::string string(std::string_view key) const {
        const json& v = at(key);
        if (!v.is_string()) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected a string");
        }
        return v.get<std::string>();
    }

    std::string string(std::string_view key, std::string fallback) const {
        return has(key) ? string(key) : fallback;
    }

    bool boolean(std::string_view key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_boolean()) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected a boolean");
        }
        return v.get<bool>();
    }

    const json& array(std::string_view key) const {
        const json& v = at(key);
        if (!v.is_array()) {
            fail(ErrorCode::ConfigParse, path(key) + ": expected an array");
        }
        return v;
    }

private:
    const json& j_;
    std::string path_;
};

/// Runs `fn`, re-labelling library validation errors as ConfigParse at `path`.
template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigParse) {
            throw;
        }
        fail(ErrorCode::ConfigParse, path + ": " + e.what());
    }
}

inline std::string index_path(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

// ---------------------------------------------------------------------------
// PhysConsts
// ---------------------------------------------------------------------------

inline json to_json(const PhysConsts& k) {
    return json{{"hbar", k.hbar}, {"m", k.m}, {"e", k.e}, {"c", k.c}};
}

inline PhysConsts consts_from_json(const json& j, const std::string& path,
                                   const PhysConsts& defaults = {}) {
    ObjectReader r(j, path, {"hbar", "m", "e", "c"});
    PhysConsts k{r.number("hbar", defaults.hbar), r.number("m", defaults.m),
                 r.number("e", defaults.e), r.number("c", defaults.c)};
    at_path(path, [&] { k.validate(); });
    return k;
}

// ---------------------------------------------------------------------------
// TimeCoefficient: [{"re": a, "im": b, "n": power, "lambda": rate}, ...]
// ---------------------------------------------------------------------------

inline json to_json(const TimeCoefficient& c) {
    json out = json::array();
    for (const auto& term : c.terms()) {
        out.push_back({{"re", term.amplitude.real()},
                       {"im", term.amplitude.imag()},
                       {"n", term.power},
                       {"lambda", term.rate}});
    }
    return out;
}

inline TimeCoefficient time_coefficient_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) {
        fail(ErrorCode::ConfigParse, path + ": expected an array of terms");
    }
    std::vector<TimeTerm> terms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = index_path(path, i);
        ObjectReader r(j[i], p, {"re", "im", "n", "lambda"});
        const int n = r.has("n") ? r.integer("n") : 0;
        terms.push_back({complex(r.number("re"), r.number("im", 0.0)), n, r.number("lambda", 0.0)});
    }
    return at_path(path, [&] { return TimeCoefficient(std::move(terms)); });
}

// ---------------------------------------------------------------------------
// HarmonicFamily: {"family": tag, "params": {...}, "consts": {...}}
// ---------------------------------------------------------------------------

inline json params_to_json(const HarmonicFamily& family);

inline json family_to_json(const HarmonicFamily& family) {
    return json{{"family", std::string(family.tag())}, {"params", params_to_json(family)}};
}

inline json to_json(const HarmonicFamily& family, const PhysConsts& consts) {
    json out = family_to_json(family);
    out["consts"] = to_json(consts);
    return out;
}

inline json params_to_json(const HarmonicFamily& family) {
    return std::visit(
        [](const auto& f) -> json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Free1D>) {
                return {{"P", f.P}};
            } else if constexpr (std::is_same_v<T, ConstantForce1D>) {
                return {{"F", f.F}, {"P", f.P}};
            } else if constexpr (std::is_same_v<T, GrowingForce1D>) {
                return {{"k", f.k}, {"P", f.P}};
            } else if constexpr (std::is_same_v<T, GeneralLinear1D>) {
                return {{"alpha", to_json(f.alpha)}, {"beta0", f.beta0}};
            } else if constexpr (std::is_same_v<T, AnalyticPoly2D>) {
                json coeffs = json::array();
                for (const auto& c : f.coeffs) {
                    coeffs.push_back(to_json(c));
                }
                return {{"coeffs", coeffs}};
            } else if constexpr (std::is_same_v<T, RepulsiveOscillator2D>) {
                return {{"omega", f.omega}, {"P1", f.P1}, {"P2", f.P2}};
            } else if constexpr (std::is_same_v<T, LogCentral2D>) {
                return {{"k", f.k}};
            } else {
                json blocks = json::array();
                for (const auto& b : f.blocks) {
                    blocks.push_back({{"family", family_to_json(b.family)}, {"offset", b.offset}});
                }
                return {{"blocks", blocks}};
            }
        },
        family.variant());
}

inline HarmonicFamily family_from_json(const json& j, const std::string& path);

inline HarmonicFamily family_params_from_json(const std::string& tag, const json& params,
                                              const std::string& path) {
    auto build = [&](auto&& make) { return at_path(path, make); };
    if (tag == "Free1D") {
        ObjectReader r(params, path, {"P"});
        return build([&] { return HarmonicFamily(Free1D{r.number("P", 0.0)}); });
    }
    if (tag == "ConstantForce1D") {
        ObjectReader r(params, path, {"F", "P"});
        return build([&] { return HarmonicFamily(ConstantForce1D{r.number("F"), r.number("P", 0.0)}); });
    }
    if (tag == "GrowingForce1D") {
        ObjectReader r(params, path, {"k", "P"});
        return build([&] { return HarmonicFamily(GrowingForce1D{r.number("k"), r.number("P", 0.0)}); });
    }
    if (tag == "GeneralLinear1D") {
        ObjectReader r(params, path, {"alpha", "beta0"});
        TimeCoefficient alpha = time_coefficient_from_json(r.at("alpha"), r.path("alpha"));
        return build([&] { return HarmonicFamily(GeneralLinear1D{alpha, r.number("beta0", 0.0)}); });
    }
    if (tag == "AnalyticPoly2D") {
        ObjectReader r(params, path, {"coeffs"});
        const json& arr = r.array("coeffs");
        std::vector<TimeCoefficient> coeffs;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            coeffs.push_back(time_coefficient_from_json(arr[i], index_path(r.path("coeffs"), i)));
        }
        return build([&] { return HarmonicFamily(AnalyticPoly2D{coeffs}); });
    }
    if (tag == "RepulsiveOscillator2D") {
        ObjectReader r(params, path, {"omega", "P1", "P2"});
        return build([&] {
            return HarmonicFamily(
                RepulsiveOscillator2D{r.number("omega"), r.number("P1", 0.0), r.number("P2", 0.0)});
        });
    }
    if (tag == "LogCentral2D") {
        ObjectReader r(params, path, {"k"});
        return build([&] { return HarmonicFamily(LogCentral2D{r.number("k")}); });
    }
    if (tag == "Composite") {
        ObjectReader r(params, path, {"blocks"});
        const json& arr = r.array("blocks");
        Composite composite;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = index_path(r.path("blocks"), i);
            ObjectReader b(arr[i], p, {"family", "offset"});
            composite.blocks.push_back(
                {family_from_json(b.at("family"), b.path("family")), b.count("offset")});
        }
        return build([&] { return HarmonicFamily(std::move(composite)); });
    }
    fail(ErrorCode::ConfigParse, path + ": unknown family '" + tag + "'");
}

/// Parses {"family", "params"} (a "consts" key is accepted and ignored here;
/// see family_consts_from_json).
inline HarmonicFamily family_from_json(const json& j, const std::string& path) {
    ObjectReader r(j, path, {"family", "params", "consts"});
    const json empty = json::object();
    return family_params_from_json(r.string("family"), r.has("params") ? r.at("params") : empty,
                                   r.path("params"));
}

inline PhysConsts family_consts_from_json(const json& j, const std::string& path,
                                          const PhysConsts& defaults) {
    ObjectReader r(j, path, {"family", "params", "consts"});
    return r.has("consts") ? consts_from_json(r.at("consts"), r.path("consts"), defaults) : defaults;
}

// ---------------------------------------------------------------------------
// Gauge and potentials
// ---------------------------------------------------------------------------

inline json to_json(const GaugeField& gauge) {
    if (const auto* b = std::get_if<UniformB>(&gauge)) {
        return {{"type", "uniform_b"}, {"B", b->B}};
    }
    return {{"type", "zero"}};
}

inline GaugeField gauge_from_json(const json& j, const std::string& path) {
    ObjectReader r(j, path, {"type", "B"});
    const std::string type = r.string("type");
    if (type == "zero") {
        return ZeroGauge{};
    }
    if (type == "uniform_b") {
        return UniformB{r.number("B")};
    }
    fail(ErrorCode::ConfigParse, r.path("type") + ": unknown gauge '" + type + "'");
}

inline json to_json(const CatalogPotential& p) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return {{"type", "ZeroPotential"}, {"dim", v.dim}};
            } else if constexpr (std::is_same_v<T, UniformForce>) {
                return {{"type", "UniformForce"}, {"F", v.F}};
            } else if constexpr (std::is_same_v<T, GrowingForce>) {
                return {{"type", "GrowingForce"}, {"k", v.k}};
            } else if constexpr (std::is_same_v<T, RepulsiveOsc>) {
                return {{"type", "RepulsiveOsc"}, {"omega", v.omega}};
            } else if constexpr (std::is_same_v<T, InverseSquare>) {
                return {{"type", "InverseSquare"}, {"k", v.k}};
            } else {
                json blocks = json::array();
                for (const auto& b : v.blocks) {
                    blocks.push_back({{"potential", to_json(b.potential)}, {"offset", b.offset}});
                }
                return {{"type", "CompositeSum"}, {"blocks", blocks}};
            }
        },
        p.variant());
}

inline CatalogPotential catalog_from_json(const json& j, const std::string& path) {
    const std::string type = ObjectReader(j, path, {"type", "dim", "F", "k", "omega", "blocks"})
                                 .string("type");
    if (type == "ZeroPotential") {
        ObjectReader r(j, path, {"type", "dim"});
        return ZeroPotential{r.count("dim", 1)};
    }
    if (type == "UniformForce") {
        return UniformForce{ObjectReader(j, path, {"type", "F"}).number("F")};
    }
    if (type == "GrowingForce") {
        return GrowingForce{ObjectReader(j, path, {"type", "k"}).number("k")};
    }
    if (type == "RepulsiveOsc") {
        return RepulsiveOsc{ObjectReader(j, path, {"type", "omega"}).number("omega")};
    }
    if (type == "InverseSquare") {
        return InverseSquare{ObjectReader(j, path, {"type", "k"}).number("k")};
    }
    if (type == "CompositeSum") {
        ObjectReader r(j, path, {"type", "blocks"});
        const json& arr = r.array("blocks");
        CompositeSum sum;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = index_path(r.path("blocks"), i);
            ObjectReader b(arr[i], p, {"potential", "offset"});
            sum.blocks.push_back(
                {catalog_from_json(b.at("potential"), b.path("potential")), b.count("offset")});
        }
        return sum;
    }
    fail(ErrorCode::ConfigParse, path + ".type: unknown catalog potential '" + type + "'");
}

inline json to_json(const PotentialSpec& spec) {
    if (const auto* s = std::get_if<Synthesized>(&spec.source)) {
        return {{"kind", "synthesized"}, {"family", family_to_json(s->family)},
                {"gauge", to_json(s->gauge)}};
    }
    return {{"kind", "catalog"}, {"catalog", to_json(std::get<CatalogPotential>(spec.source))}};
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

inline json to_json(const GridSpec& grid) {
    json axes = json::array();
    for (const auto& a : grid.axes()) {
        axes.push_back({{"min", a.min}, {"max", a.max}, {"n", a.n}});
    }
    return {{"axes", axes}};
}

inline GridSpec grid_from_json(const json& j, const std::string& path) {
    ObjectReader r(j, path, {"axes"});
    const json& arr = r.array("axes");
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        ObjectReader a(arr[i], index_path(r.path("axes"), i), {"min", "max", "n"});
        axes.push_back({a.number("min"), a.number("max"), a.count("n")});
    }
    return at_path(path, [&] { return GridSpec(std::move(axes)); });
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string_view to_string(OrderStatus s) {
    switch (s) {
        case OrderStatus::Absent: return "absent";
        case OrderStatus::Estimated: return "estimated";
        case OrderStatus::NotApplicable: return "not_applicable";
    }
    return "absent";
}

inline json to_json(const ResidualReport& r) {
    return {{"check", std::string(hjlab::to_string(r.check))},
            {"family", r.family},
            {"grid", r.grid},
            {"t", r.t},
            {"h", r.h},
            {"l2", finite_or_null(r.l2)},
            {"linf", finite_or_null(r.linf)},
            {"scale", finite_or_null(r.scale)},
            {"rel", finite_or_null(r.rel())},
            {"tolerance", r.tolerance},
            {"nominal_order", r.nominal_order},
            {"order_status", std::string(to_string(r.order_status))},
            {"order_estimate", r.order_status == OrderStatus::Estimated
                                   ? finite_or_null(r.order_estimate)
                                   : json(nullptr)},
            {"pass", r.pass()},
            {"warning", r.warning}};
}

/// Column order shared by the CSV alternative of the report JSON.
inline constexpr std::string_view kReportCsvHeader =
    "check,family,grid,t,h,l2,linf,scale,rel,tolerance,order_estimate,pass,warning";

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        out += ch;
        if (ch == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

inline std::string to_csv_row(const ResidualReport& r) {
    std::string row = std::string(hjlab::to_string(r.check)) + "," + csv_quote(r.family) + "," +
                      csv_quote(r.grid) + "," + format_double(r.t) + "," + format_double(r.h) +
                      "," + format_double(r.l2) + "," + format_double(r.linf) + "," +
                      format_double(r.scale) + "," + format_double(r.rel()) + "," +
                      format_double(r.tolerance) + ",";
    if (r.order_status == OrderStatus::Estimated) {
        row += format_double(r.order_estimate);
    }
    row += std::string(",") + (r.pass() ? "true" : "false") + "," + csv_quote(r.warning);
    return row;
}

inline json to_json(const Region& region) {
    return {{"xmin", region.xmin}, {"xmax", region.xmax}};
}

inline json to_json(const CompareReport& c) {
    return {{"l2_rel", finite_or_null(c.l2_rel)},
            {"linf_rel", finite_or_null(c.linf_rel)},
            {"norm_drift", finite_or_null(c.norm_drift)},
            {"region", to_json(c.region)}};
}

}  // namespace io
}  // namespace hjlab
