#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/evolve.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"
#include "hjlab/serialize.hpp"
#include "hjlab/synth.hpp"
#include "hjlab/verify.hpp"

namespace hjlab {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr int kConfigVersion = 1;

/// Norm drift allowed for a Crank-Nicolson run to count as unitary.
inline constexpr double kNormDriftTolerance = 1e-10;
/// Accepted error-reduction factor under joint (h, dt) halving.
inline constexpr double kRefinementRatioLow = 3.4;
inline constexpr double kRefinementRatioHigh = 4.6;

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// How a job obtains V: synthesized from its family, the family's closed-form
/// catalog partner, or an explicit catalog entry.
struct PotentialChoice {
    enum class Kind { Synthesized, Matching, Catalog } kind = Kind::Synthesized;
    std::optional<CatalogPotential> catalog;
};

struct VerifyJob {
    HarmonicFamily family = Free1D{};
    PhysConsts consts;
    PotentialChoice potential;
    GaugeField gauge = ZeroGauge{};
    std::vector<CheckKind> checks;
    std::vector<GridSpec> grids;
    std::vector<double> times;
    int order = 2;
};

/// Equivalence identity on the non-harmonic test action coefficient * x^power.
struct IdentityJob {
    int power = 2;
    double coefficient = 1.0;
    PhysConsts consts;
    std::vector<GridSpec> grids;
    std::vector<double> times;
    int order = 2;
};

struct PropagateJob {
    PacketSpec packet;
    PhysConsts consts;
    PotentialChoice potential;
    GridSpec grid;
    PropagatorConfig config;
    Region region;
    double tolerance = 1e-2;
    std::size_t refinement_levels = 1;
};

struct ExpandJob {
    HarmonicFamily family = Free1D{};
    PhysConsts consts;
    double center = 0.0;
    double sigma = 1.0;
    double momentum = 0.0;
    GridSpec grid;
    Quadrature quadrature;
    double t = 0.0;
    double tolerance = 1e-6;
};

struct DumpJob {
    enum class What { S, V, Psi } what = What::S;
    HarmonicFamily family = Free1D{};
    PhysConsts consts;
    GridSpec grid;
    std::vector<double> times;
};

struct Job {
    std::string name;
    std::variant<VerifyJob, IdentityJob, PropagateJob, ExpandJob, DumpJob> body;

    std::string_view type() const {
        static constexpr std::array<std::string_view, 5> kTypes = {"verify", "identity",
                                                                   "propagate", "expand", "dump"};
        return kTypes[body.index()];
    }
};

struct RunConfig {
    int version = kConfigVersion;
    PhysConsts consts;
    std::vector<Job> jobs;
};

namespace detail {

inline CheckKind check_from_string(const std::string& s, const std::string& path) {
    for (auto kind : {CheckKind::Laplace, CheckKind::HamiltonJacobi, CheckKind::Schrodinger,
                      CheckKind::EquivalenceIdentity, CheckKind::OperatorEigen}) {
        if (s == to_string(kind)) {
            return kind;
        }
    }
    fail(ErrorCode::ConfigParse, path + ": unknown check '" + s + "'");
}

inline std::vector<double> numbers_from_json(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) {
        fail(ErrorCode::ConfigParse, path + ": expected a nonempty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number() || !std::isfinite(arr[i].get<double>())) {
            fail(ErrorCode::ConfigParse, io::index_path(path, i) + ": expected a finite number");
        }
        out.push_back(arr[i].get<double>());
    }
    return out;
}

inline std::vector<GridSpec> grids_from_json(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) {
        fail(ErrorCode::ConfigParse, path + ": expected a nonempty array of grids");
    }
    std::vector<GridSpec> grids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        grids.push_back(io::grid_from_json(arr[i], io::index_path(path, i)));
    }
    if (grids.size() > 1) {
        io::at_path(path, [&] { check_refinement_grids(grids); });
    }
    return grids;
}

inline int order_from(const io::ObjectReader& r) {
    const int order = r.has("order") ? r.integer("order") : 2;
    if (order != 2 && order != 4) {
        fail(ErrorCode::ConfigParse, r.path("order") + ": stencil order must be 2 or 4");
    }
    return order;
}

inline PotentialChoice potential_choice_from_json(const json& j, const std::string& path) {
    io::ObjectReader r(j, path, {"kind", "catalog"});
    const std::string kind = r.string("kind");
    PotentialChoice out;
    if (kind == "synthesized") {
        out.kind = PotentialChoice::Kind::Synthesized;
    } else if (kind == "matching") {
        out.kind = PotentialChoice::Kind::Matching;
    } else if (kind == "catalog") {
        out.kind = PotentialChoice::Kind::Catalog;
        out.catalog = io::catalog_from_json(r.at("catalog"), r.path("catalog"));
    } else {
        fail(ErrorCode::ConfigParse, r.path("kind") + ": unknown potential kind '" + kind + "'");
    }
    if (kind != "catalog" && r.has("catalog")) {
        fail(ErrorCode::ConfigParse, r.path("catalog") + ": only valid with kind 'catalog'");
    }
    return out;
}

inline PotentialSpec resolve_potential(const PotentialChoice& choice,
                                       const HarmonicFamily& family, const GaugeField& gauge) {
    switch (choice.kind) {
        case PotentialChoice::Kind::Synthesized:
            return PotentialSpec{Synthesized{family, gauge}};
        case PotentialChoice::Kind::Matching: {
            auto cat = matching_catalog(family);
            require(cat.has_value(), ErrorCode::InvalidArgument,
                    std::string(family.tag()) + " has no closed-form catalog potential");
            return PotentialSpec{*cat};
        }
        case PotentialChoice::Kind::Catalog:
            return PotentialSpec{*choice.catalog};
    }
    fail(ErrorCode::InvalidArgument, "unreachable potential kind");
}

inline Job job_from_json(const json& j, const std::string& path, const PhysConsts& run_consts,
                         std::size_t index) {
    const io::ObjectReader head(j, path,
                                {"name", "type", "family", "potential", "gauge", "checks",
                                 "grids", "times", "order", "power", "coefficient", "packet",
                                 "grid", "propagator", "region", "tolerance",
                                 "refinement_levels", "target", "quadrature", "t", "what"});
    Job job;
    job.name = head.string("name", "job" + std::to_string(index));
    const std::string type = head.string("type");

    if (type == "verify") {
        io::ObjectReader r(j, path, {"name", "type", "family", "potential", "gauge", "checks",
                                     "grids", "times", "order"});
        VerifyJob v;
        v.family = io::family_from_json(r.at("family"), r.path("family"));
        v.consts = io::family_consts_from_json(r.at("family"), r.path("family"), run_consts);
        if (r.has("potential")) {
            v.potential = potential_choice_from_json(r.at("potential"), r.path("potential"));
        }
        if (r.has("gauge")) {
            v.gauge = io::gauge_from_json(r.at("gauge"), r.path("gauge"));
            io::at_path(r.path("gauge"), [&] { check_gauge(v.gauge, v.family.dim()); });
        }
        const json& checks = r.array("checks");
        for (std::size_t i = 0; i < checks.size(); ++i) {
            const std::string p = io::index_path(r.path("checks"), i);
            if (!checks[i].is_string()) {
                fail(ErrorCode::ConfigParse, p + ": expected a check name");
            }
            v.checks.push_back(check_from_string(checks[i].get<std::string>(), p));
        }
        v.grids = grids_from_json(r.at("grids"), r.path("grids"));
        for (std::size_t i = 0; i < v.grids.size(); ++i) {
            if (v.grids[i].dim() != v.family.dim()) {
                fail(ErrorCode::ConfigParse, io::index_path(r.path("grids"), i) +
                                                 ": grid dimension does not match the family");
            }
        }
        v.times = numbers_from_json(r.at("times"), r.path("times"));
        v.order = order_from(r);
        if (v.potential.kind == PotentialChoice::Kind::Matching) {
            io::at_path(r.path("potential"),
                        [&] { resolve_potential(v.potential, v.family, v.gauge); });
        }
        job.body = std::move(v);
    } else if (type == "identity") {
        io::ObjectReader r(j, path,
                           {"name", "type", "power", "coefficient", "grids", "times", "order"});
        IdentityJob v;
        v.power = r.integer("power");
        if (v.power < 0) {
            fail(ErrorCode::ConfigParse, r.path("power") + ": must be nonnegative");
        }
        v.coefficient = r.number("coefficient", 1.0);
        v.consts = run_consts;
        v.grids = grids_from_json(r.at("grids"), r.path("grids"));
        for (std::size_t i = 0; i < v.grids.size(); ++i) {
            if (v.grids[i].dim() != 1) {
                fail(ErrorCode::ConfigParse,
                     io::index_path(r.path("grids"), i) + ": identity jobs use 1D grids");
            }
        }
        v.times = numbers_from_json(r.at("times"), r.path("times"));
        v.order = order_from(r);
        job.body = std::move(v);
    } else if (type == "propagate") {
        io::ObjectReader r(j, path, {"name", "type", "packet", "potential", "grid", "propagator",
                                     "region", "tolerance", "refinement_levels"});
        PropagateJob v;
        const io::ObjectReader pk(r.at("packet"), r.path("packet"),
                                  {"family", "P0", "sigmaP", "quadrature"});
        const HarmonicFamily family = io::family_from_json(pk.at("family"), pk.path("family"));
        v.consts = io::family_consts_from_json(pk.at("family"), pk.path("family"), run_consts);
        const io::ObjectReader q(pk.at("quadrature"), pk.path("quadrature"),
                                 {"Pmin", "Pmax", "npts"});
        v.packet = PacketSpec{family, GaussianWeight{pk.number("P0", 0.0), pk.number("sigmaP")},
                              Quadrature{q.number("Pmin"), q.number("Pmax"), q.count("npts")}};
        io::at_path(r.path("packet"), [&] { v.packet.validate(); });
        v.potential.kind = PotentialChoice::Kind::Matching;
        if (r.has("potential")) {
            v.potential = potential_choice_from_json(r.at("potential"), r.path("potential"));
        }
        io::at_path(r.path("potential"), [&] {
            const PotentialSpec spec = resolve_potential(v.potential, family, ZeroGauge{});
            require(spec.dim() == 1, ErrorCode::DimensionMismatch, "potential must be 1D");
        });
        v.grid = io::grid_from_json(r.at("grid"), r.path("grid"));
        if (v.grid.dim() != 1) {
            fail(ErrorCode::ConfigParse, r.path("grid") + ": propagation grids are 1D");
        }
        const io::ObjectReader pc(r.at("propagator"), r.path("propagator"),
                                  {"dt", "T", "t0", "snapshot_stride"});
        v.config.dt = pc.number("dt");
        v.config.duration = pc.number("T");
        v.config.t0 = pc.number("t0", 0.0);
        v.config.snapshot_stride = pc.count("snapshot_stride", 0);
        io::at_path(r.path("propagator"), [&] { v.config.steps(); });
        const io::ObjectReader rg(r.at("region"), r.path("region"), {"xmin", "xmax"});
        v.region = Region{rg.number("xmin"), rg.number("xmax")};
        v.tolerance = r.number("tolerance", 1e-2);
        v.refinement_levels = r.count("refinement_levels", 1);
        if (v.refinement_levels < 1) {
            fail(ErrorCode::ConfigParse, r.path("refinement_levels") + ": must be >= 1");
        }
        io::at_path(r.path("packet"),
                    [&] { check_aliasing(v.packet.quadrature.step(), v.grid, v.consts.hbar); });
        job.body = std::move(v);
    } else if (type == "expand") {
        io::ObjectReader r(j, path,
                           {"name", "type", "family", "target", "grid", "quadrature", "t",
                            "tolerance"});
        ExpandJob v;
        v.family = io::family_from_json(r.at("family"), r.path("family"));
        v.consts = io::family_consts_from_json(r.at("family"), r.path("family"), run_consts);
        io::at_path(r.path("family"), [&] { with_momentum(v.family, 0.0); });
        const io::ObjectReader tg(r.at("target"), r.path("target"),
                                  {"type", "center", "sigma", "momentum"});
        if (tg.string("type") != "gaussian") {
            fail(ErrorCode::ConfigParse, tg.path("type") + ": only 'gaussian' targets exist");
        }
        v.center = tg.number("center", 0.0);
        v.sigma = tg.number("sigma");
        v.momentum = tg.number("momentum", 0.0);
        if (v.sigma <= 0.0) {
            fail(ErrorCode::ConfigParse, tg.path("sigma") + ": must be positive");
        }
        v.grid = io::grid_from_json(r.at("grid"), r.path("grid"));
        if (v.grid.dim() != 1) {
            fail(ErrorCode::ConfigParse, r.path("grid") + ": expansion grids are 1D");
        }
        const io::ObjectReader q(r.at("quadrature"), r.path("quadrature"),
                                 {"Pmin", "Pmax", "npts"});
        v.quadrature = Quadrature{q.number("Pmin"), q.number("Pmax"), q.count("npts")};
        io::at_path(r.path("quadrature"), [&] {
            v.quadrature.validate();
            check_aliasing(v.quadrature.step(), v.grid, v.consts.hbar);
        });
        v.t = r.number("t", 0.0);
        v.tolerance = r.number("tolerance", 1e-6);
        job.body = std::move(v);
    } else if (type == "dump") {
        io::ObjectReader r(j, path, {"name", "type", "family", "what", "grid", "times"});
        DumpJob v;
        v.family = io::family_from_json(r.at("family"), r.path("family"));
        v.consts = io::family_consts_from_json(r.at("family"), r.path("family"), run_consts);
        const std::string what = r.string("what");
        if (what == "S") {
            v.what = DumpJob::What::S;
        } else if (what == "V") {
            v.what = DumpJob::What::V;
        } else if (what == "psi") {
            v.what = DumpJob::What::Psi;
        } else {
            fail(ErrorCode::ConfigParse, r.path("what") + ": expected S, V or psi");
        }
        v.grid = io::grid_from_json(r.at("grid"), r.path("grid"));
        if (v.grid.dim() != v.family.dim()) {
            fail(ErrorCode::ConfigParse, r.path("grid") + ": grid dimension does not match");
        }
        v.times = numbers_from_json(r.at("times"), r.path("times"));
        job.body = std::move(v);
    } else {
        fail(ErrorCode::ConfigParse, head.path("type") + ": unknown job type '" + type + "'");
    }
    return job;
}

}  // namespace detail

/// Parses and fully validates a run configuration; nothing executes until
/// every key of every job is accepted.
inline RunConfig parse_run_config(const json& j) {
    io::ObjectReader r(j, "$", {"version", "consts", "jobs"});
    RunConfig config;
    config.version = r.integer("version");
    if (config.version != kConfigVersion) {
        fail(ErrorCode::ConfigParse, "$.version: unsupported version " +
                                         std::to_string(config.version));
    }
    if (r.has("consts")) {
        config.consts = io::consts_from_json(r.at("consts"), r.path("consts"));
    }
    const json& jobs = r.array("jobs");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const std::string p = io::index_path("$.jobs", i);
        config.jobs.push_back(detail::job_from_json(jobs[i], p, config.consts, i));
        const std::string& name = config.jobs.back().name;
        if (std::find(names.begin(), names.end(), name) != names.end()) {
            fail(ErrorCode::ConfigParse, p + ".name: duplicate job name '" + name + "'");
        }
        names.push_back(name);
    }
    return config;
}

inline RunConfig parse_run_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigParse, std::string("$: invalid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::ConfigParse, "cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config_text(buffer.str());
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct OutputFile {
    std::string name;
    std::string content;
};

struct JobResult {
    std::string name;
    std::string type;
    bool pass = false;
    std::string error;
    json detail = json::object();
    std::vector<OutputFile> files;
};

namespace detail {

inline json study_to_json(CheckKind kind, double t, const RefinementStudy& study) {
    json levels = json::array();
    for (const auto& r : study.levels) {
        levels.push_back(io::to_json(r));
    }
    json pairs = json::array();
    for (const auto& p : study.pair_orders) {
        pairs.push_back(p ? io::finite_or_null(*p) : json(nullptr));
    }
    return {{"check", std::string(to_string(kind))},
            {"t", t},
            {"mean_order", study.mean_order ? io::finite_or_null(*study.mean_order) : json(nullptr)},
            {"pair_orders", pairs},
            {"pass", study.pass()},
            {"levels", levels}};
}

/// Single grid: one report. Several grids: a refinement study.
template <typename Check>
RefinementStudy run_levels(Check&& check, const std::vector<GridSpec>& grids) {
    if (grids.size() == 1) {
        RefinementStudy study;
        study.levels.push_back(check(grids.front()));
        return study;
    }
    return refinement_study(std::forward<Check>(check), std::span<const GridSpec>(grids));
}

inline void run_verify(const VerifyJob& job, JobResult& out) {
    const Action action = make_action(job.family, job.consts);
    const PotentialSpec spec = resolve_potential(job.potential, job.family, job.gauge);
    const PotentialFn V = make_potential(spec, job.consts);
    const std::string vid = spec.id();
    json studies = json::array();
    bool pass = true;
    auto add = [&](CheckKind kind, double t, const RefinementStudy& study) {
        pass = pass && study.pass();
        studies.push_back(study_to_json(kind, t, study));
    };
    for (const double t : job.times) {
        for (const CheckKind kind : job.checks) {
            switch (kind) {
                case CheckKind::Laplace:
                    add(kind, t, run_levels([&](const GridSpec& g) {
                            return laplace_residual(action, g, t, job.order);
                        }, job.grids));
                    break;
                case CheckKind::HamiltonJacobi:
                    add(kind, t, run_levels([&](const GridSpec& g) {
                            return hj_residual(action, V, vid, job.gauge, job.consts, g, t);
                        }, job.grids));
                    break;
                case CheckKind::Schrodinger:
                    add(kind, t, run_levels([&](const GridSpec& g) {
                            return schrodinger_residual(action, V, vid, job.gauge, job.consts, g,
                                                        t, job.order);
                        }, job.grids));
                    break;
                case CheckKind::EquivalenceIdentity:
                    add(kind, t, run_levels([&](const GridSpec& g) {
                            return equivalence_identity_check(action, job.gauge, job.consts, g, t,
                                                              job.order)
                                .difference;
                        }, job.grids));
                    break;
                case CheckKind::OperatorEigen: {
                    const auto ops = predefined_operators(job.family, job.consts);
                    require(!ops.empty(), ErrorCode::InvalidArgument,
                            std::string(job.family.tag()) + " has no predefined conserved operators");
                    for (const auto& op : ops) {
                        add(kind, t, run_levels([&](const GridSpec& g) {
                                return operator_eigencheck_analytic(op, action, g, t);
                            }, job.grids));
                        if (job.grids.size() > 1) {
                            add(kind, t, refinement_study([&](const GridSpec& g) {
                                    return operator_eigencheck(op, action, job.consts, g, t,
                                                               job.order);
                                }, std::span<const GridSpec>(job.grids)));
                        }
                    }
                    break;
                }
            }
        }
    }
    out.detail["family"] = io::to_json(job.family, job.consts);
    out.detail["potential"] = io::to_json(spec);
    out.detail["studies"] = studies;
    out.pass = pass;
}

inline void run_identity(const IdentityJob& job, JobResult& out) {
    const Action action = monomial_action(job.power, job.coefficient);
    json studies = json::array();
    bool pass = true;
    for (const double t : job.times) {
        json sides = json::array();
        const RefinementStudy study = run_levels(
            [&](const GridSpec& g) {
                const EquivalenceResult r =
                    equivalence_identity_check(action, ZeroGauge{}, job.consts, g, t, job.order);
                sides.push_back({{"schrodinger_linf", r.schrodinger_linf},
                                 {"reference_linf", r.reference_linf}});
                return r.difference;
            },
            job.grids);
        json s = study_to_json(CheckKind::EquivalenceIdentity, t, study);
        s["sides"] = sides;
        studies.push_back(s);
        pass = pass && study.pass();
    }
    out.detail["action"] = action.id;
    out.detail["studies"] = studies;
    out.pass = pass;
}

inline GridSpec refine_1d(const GridSpec& grid, std::size_t level) {
    Axis axis = grid.axis(0);
    axis.n = ((axis.n - 1) << level) + 1;
    return GridSpec({axis});
}

inline void run_propagate(const PropagateJob& job, JobResult& out) {
    const PotentialSpec spec =
        resolve_potential(job.potential, job.packet.family_template, ZeroGauge{});
    const PotentialFn V = make_potential(spec, job.consts);
    json levels = json::array();
    std::vector<double> errors;
    bool pass = true;
    for (std::size_t level = 0; level < job.refinement_levels; ++level) {
        const GridSpec grid = refine_1d(job.grid, level);
        PropagatorConfig config = job.config;
        config.dt = job.config.dt / static_cast<double>(std::size_t{1} << level);
        if (level > 0) {
            config.snapshot_stride = 0;
        }
        const ComplexField psi0 = build_packet(job.packet, job.consts, grid, config.t0);
        const PropagationResult run = crank_nicolson_1d(psi0, V, job.consts, config);
        const CompareReport cmp =
            compare_exact(run, job.packet, job.consts, run.t_final, job.region);
        json entry = io::to_json(cmp);
        entry["n"] = grid.axis(0).n;
        entry["dt"] = config.dt;
        levels.push_back(entry);
        errors.push_back(cmp.l2_rel);
        pass = pass && cmp.norm_drift <= kNormDriftTolerance;
        if (level == 0) {
            pass = pass && cmp.l2_rel <= job.tolerance;
            if (!run.snapshots.empty()) {
                std::ostringstream csv;
                write_csv_header(csv, 1, true);
                for (const auto& snap : run.snapshots) {
                    write_csv_rows(csv, snap.psi, snap.t);
                }
                out.files.push_back({out.name + "_snapshots.csv", csv.str()});
            }
        }
    }
    json ratios = json::array();
    for (std::size_t i = 1; i < errors.size(); ++i) {
        const double ratio = errors[i - 1] / errors[i];
        ratios.push_back(io::finite_or_null(ratio));
        pass = pass && ratio >= kRefinementRatioLow && ratio <= kRefinementRatioHigh;
    }
    out.detail["potential"] = io::to_json(spec);
    out.detail["compare"] = levels.front();
    out.detail["levels"] = levels;
    out.detail["refinement_ratios"] = ratios;
    out.pass = pass;
}

inline void run_expand(const ExpandJob& job, JobResult& out) {
    const ComplexField target =
        gaussian_state(job.grid, job.center, job.sigma, job.momentum, job.consts.hbar);
    const ExpansionResult r =
        expand_and_reconstruct(target, job.family, job.consts, job.t, job.quadrature);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < r.coeffs.size(); ++i) {
        if (std::abs(r.coeffs[i]) > std::abs(r.coeffs[peak])) {
            peak = i;
        }
    }
    out.detail["l2_rel_error"] = io::finite_or_null(r.l2_rel_error);
    out.detail["tolerance"] = job.tolerance;
    out.detail["npts"] = r.coeffs.size();
    out.detail["peak_P"] = r.P[peak];
    out.pass = r.l2_rel_error <= job.tolerance;
}

inline void run_dump(const DumpJob& job, JobResult& out) {
    std::ostringstream csv;
    const Action action = make_action(job.family, job.consts);
    const PotentialFn V = synthesized_potential(action, ZeroGauge{}, job.consts);
    switch (job.what) {
        case DumpJob::What::S:
            write_csv_header(csv, job.grid.dim(), false, "v");
            break;
        case DumpJob::What::V:
            write_csv_header(csv, job.grid.dim(), false, "V");
            break;
        case DumpJob::What::Psi:
            write_csv_header(csv, job.grid.dim(), true);
            break;
    }
    for (const double t : job.times) {
        switch (job.what) {
            case DumpJob::What::S:
                write_csv_rows(csv, sample([&](std::span<const double> x, double tt) {
                                   return action.eval(x, tt).S;
                               }, job.grid, t), t);
                break;
            case DumpJob::What::V:
                write_csv_rows(csv, sample(V, job.grid, t), t);
                break;
            case DumpJob::What::Psi:
                write_csv_rows(csv, sample([&](std::span<const double> x, double tt) {
                                   return std::polar(1.0, action.eval(x, tt).S / job.consts.hbar);
                               }, job.grid, t), t);
                break;
        }
    }
    out.files.push_back({out.name + ".csv", csv.str()});
    out.detail["rows"] = job.grid.size() * job.times.size();
    out.pass = true;
}

}  // namespace detail

/// Runs one job; library errors become a failed result, never an exception.
inline JobResult run_job(const Job& job) {
    JobResult out;
    out.name = job.name;
    out.type = std::string(job.type());
    try {
        std::visit(
            [&](const auto& body) {
                using T = std::decay_t<decltype(body)>;
                if constexpr (std::is_same_v<T, VerifyJob>) {
                    detail::run_verify(body, out);
                } else if constexpr (std::is_same_v<T, IdentityJob>) {
                    detail::run_identity(body, out);
                } else if constexpr (std::is_same_v<T, PropagateJob>) {
                    detail::run_propagate(body, out);
                } else if constexpr (std::is_same_v<T, ExpandJob>) {
                    detail::run_expand(body, out);
                } else {
                    detail::run_dump(body, out);
                }
            },
            job.body);
    } catch (const std::exception& e) {
        out.pass = false;
        out.error = e.what();
    }
    return out;
}

struct RunOptions {
    std::string job_filter;
    std::size_t workers = 1;
};

struct RunOutcome {
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::vector<JobResult> results;

    int exit_code() const { return failed == 0 ? 0 : 1; }
};

/// Executes the selected jobs (concurrently up to `workers`), keeping results
/// in config order.
inline RunOutcome execute(const RunConfig& config, const RunOptions& options) {
    std::vector<const Job*> selected;
    for (const auto& job : config.jobs) {
        if (options.job_filter.empty() || job.name.find(options.job_filter) != std::string::npos) {
            selected.push_back(&job);
        }
    }
    RunOutcome outcome;
    outcome.results.resize(selected.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < selected.size(); i = next++) {
            outcome.results[i] = run_job(*selected[i]);
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(1, selected.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    for (const auto& r : outcome.results) {
        (r.pass ? outcome.passed : outcome.failed) += 1;
    }
    return outcome;
}

inline json meta_block(const RunOptions& options) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return {{"tool", "hjlab"},
            {"version", std::string(kVersion)},
            {"generated_at", stamp},
            {"workers", options.workers},
            {"job_filter", options.job_filter}};
}

inline json report_json(const RunOutcome& outcome) {
    json jobs = json::array();
    for (const auto& r : outcome.results) {
        json j = {{"name", r.name}, {"type", r.type}, {"pass", r.pass}};
        if (!r.error.empty()) {
            j["error"] = r.error;
        }
        for (const auto& item : r.detail.items()) {
            j[item.key()] = item.value();
        }
        jobs.push_back(j);
    }
    return {{"version", kConfigVersion}, {"jobs", jobs}};
}

inline json summary_json(const RunOutcome& outcome) {
    return {{"pass", outcome.passed}, {"fail", outcome.failed}};
}

/// Writes every job's CSV files, report.json and summary.json into `out_dir`
/// (created if missing). The `meta` block is the only non-deterministic content.
inline RunOutcome run(const RunConfig& config, const std::filesystem::path& out_dir,
                      const RunOptions& options = {}) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec && std::filesystem::is_directory(out_dir), ErrorCode::InvalidArgument,
            "cannot create output directory " + out_dir.string());
    RunOutcome outcome = execute(config, options);

    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(out_dir / name, std::ios::binary);
        require(static_cast<bool>(f), ErrorCode::InvalidArgument,
                "cannot write " + (out_dir / name).string());
        f << content;
    };
    for (const auto& r : outcome.results) {
        for (const auto& file : r.files) {
            write(file.name, file.content);
        }
    }
    const json meta = meta_block(options);
    json report = report_json(outcome);
    report["meta"] = meta;
    write("report.json", report.dump(2) + "\n");
    json summary = summary_json(outcome);
    summary["meta"] = meta;
    write("summary.json", summary.dump(2) + "\n");
    return outcome;
}

// ---------------------------------------------------------------------------
// Family listing
// ---------------------------------------------------------------------------

inline std::string list_families() {
    std::ostringstream os;
    os << "Harmonic generating functions S(x,t); V is synthesized as -dS/dt - |grad S|^2/2m.\n\n"
       << "Free1D                 params: P\n"
       << "  S = P x - P^2 t/2m\n"
       << "  potential: 0 (ZeroPotential)\n"
       << "  operators: p -> P\n\n"
       << "ConstantForce1D        params: F (nonzero), P\n"
       << "  S = (F t + P) x - (F t + P)^3/6mF\n"
       << "  potential: -F x (UniformForce)\n"
       << "  operators: p - F t -> P\n\n"
       << "GrowingForce1D         params: k (nonzero), P\n"
       << "  S = (k t^2/2 + P) x - (k^2 t^5/20 + k P t^3/3 + P^2 t)/2m\n"
       << "  potential: -k t x (GrowingForce)\n"
       << "  operators: p - k t^2/2 -> P\n\n"
       << "GeneralLinear1D        params: alpha (time coefficient), beta0\n"
       << "  S = alpha(t) x + beta(t), beta' = -alpha^2/2m, beta(0) = beta0\n"
       << "  potential: -alpha'(t) x (synthesized only)\n"
       << "  operators: p - (alpha(t) - alpha(0)) -> alpha(0)\n\n"
       << "AnalyticPoly2D         params: coeffs (time coefficients c_0..c_deg)\n"
       << "  S = Re sum_j c_j(t) z^j, z = x + i y\n"
       << "  potential: -Re(df/dt) - |f'|^2/2m (synthesized only)\n"
       << "  operators: none\n\n"
       << "RepulsiveOscillator2D  params: omega (> 0), P1, P2\n"
       << "  S = (m w/2)(x^2 - y^2) + P1 e^{-wt} x + P2 e^{wt} y + (P1^2 e^{-2wt} - P2^2 e^{2wt})/4mw\n"
       << "  potential: -(m w^2/2)(x^2 + y^2) (RepulsiveOsc)\n"
       << "  operators: e^{w t}(p_x - m w x) -> P1; e^{-w t}(p_y + m w y) -> P2\n\n"
       << "LogCentral2D           params: k (> 0); no free parameters, time-independent\n"
       << "  S = sqrt(m k/2) ln(x^2 + y^2), singular at the origin\n"
       << "  potential: -k/(x^2 + y^2) (InverseSquare)\n"
       << "  operators: none\n\n"
       << "Composite              params: blocks [{family, offset}] on disjoint axis slices, dim <= 3\n"
       << "  S = sum of block actions\n"
       << "  potential: sum of block potentials (CompositeSum)\n"
       << "  operators: block operators on shifted axes\n";
    return os.str();
}

}  // namespace hjlab
