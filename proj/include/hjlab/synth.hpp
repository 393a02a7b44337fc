#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

// ---------------------------------------------------------------------------
// Divergence-free vector potentials
// ---------------------------------------------------------------------------

struct ZeroGauge {};

/// A = (-B y / 2, B x / 2, 0): uniform field B along the third axis.
struct UniformB {
    double B = 0.0;
};

using GaugeField = std::variant<ZeroGauge, UniformB>;

inline bool is_zero_gauge(const GaugeField& gauge) {
    return std::holds_alternative<ZeroGauge>(gauge);
}

inline void check_gauge(const GaugeField& gauge, std::size_t dim) {
    if (std::holds_alternative<UniformB>(gauge)) {
        require(dim >= 2, ErrorCode::DimensionMismatch, "UniformB gauge needs dimension >= 2");
    }
}

inline std::array<double, kMaxDim> vector_potential(const GaugeField& gauge,
                                                     std::span<const double> x) {
    std::array<double, kMaxDim> a{};
    if (const auto* b = std::get_if<UniformB>(&gauge)) {
        a[0] = -0.5 * b->B * x[1];
        a[1] = 0.5 * b->B * x[0];
    }
    return a;
}

// ---------------------------------------------------------------------------
// Potential synthesis
// ---------------------------------------------------------------------------

/// V = -dS/dt - (1/2m) |grad S|^2, the field-free path.
inline double synth_from_eval_no_field(const ActionEval& a, const PhysConsts& k) {
    return -a.dSdt - a.grad_norm2() / (2.0 * k.m);
}

/// V = -dS/dt - (1/2m) |grad S - (e/c) A|^2. With ZeroGauge this takes the
/// field-free path, so both give bit-identical results.
inline double synth_from_eval(const ActionEval& a, const GaugeField& gauge, const PhysConsts& k,
                              std::span<const double> x) {
    if (is_zero_gauge(gauge)) {
        return synth_from_eval_no_field(a, k);
    }
    const auto A = vector_potential(gauge, x);
    double kin = 0.0;
    for (std::size_t i = 0; i < a.dim; ++i) {
        const double pi = a.grad[i] - (k.e / k.c) * A[i];
        kin += pi * pi;
    }
    return -a.dSdt - kin / (2.0 * k.m);
}

inline double synth_potential(const HarmonicFamily& family, const GaugeField& gauge,
                              const PhysConsts& consts, std::span<const double> x, double t) {
    check_gauge(gauge, family.dim());
    return synth_from_eval(eval_action(family, consts, x, t), gauge, consts, x);
}

inline double synth_potential_no_field(const HarmonicFamily& family, const PhysConsts& consts,
                                       std::span<const double> x, double t) {
    return synth_from_eval_no_field(eval_action(family, consts, x, t), consts);
}

// ---------------------------------------------------------------------------
// Closed-form potential catalog
// ---------------------------------------------------------------------------

struct ZeroPotential {
    std::size_t dim = 1;
};
/// V = -F x.
struct UniformForce {
    double F = 1.0;
};
/// V = -k t x.
struct GrowingForce {
    double k = 1.0;
};
/// V = -(m w^2 / 2)(x^2 + y^2).
struct RepulsiveOsc {
    double omega = 1.0;
};
/// V = -k / (x^2 + y^2).
struct InverseSquare {
    double k = 1.0;
};

struct CatalogBlock;

struct CompositeSum {
    std::vector<CatalogBlock> blocks;
};

class CatalogPotential {
public:
    using Variant = std::variant<ZeroPotential, UniformForce, GrowingForce, RepulsiveOsc,
                                 InverseSquare, CompositeSum>;

    template <typename Alt>
        requires std::constructible_from<Variant, Alt>
    CatalogPotential(Alt alt) : v_(std::move(alt)) {}

    const Variant& variant() const { return v_; }
    std::size_t dim() const;
    std::string_view tag() const;
    std::string id() const;

private:
    Variant v_;
};

struct CatalogBlock {
    CatalogPotential potential;
    std::size_t offset = 0;
};

inline std::size_t CatalogPotential::dim() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return p.dim;
            } else if constexpr (std::is_same_v<T, UniformForce> ||
                                 std::is_same_v<T, GrowingForce>) {
                return 1;
            } else if constexpr (std::is_same_v<T, CompositeSum>) {
                std::size_t total = 0;
                for (const auto& block : p.blocks) {
                    total += block.potential.dim();
                }
                return total;
            } else {
                return 2;
            }
        },
        v_);
}

inline std::string_view CatalogPotential::tag() const {
    static constexpr std::array<std::string_view, 6> kTags = {
        "ZeroPotential", "UniformForce", "GrowingForce", "RepulsiveOsc", "InverseSquare",
        "CompositeSum"};
    return kTags[v_.index()];
}

inline std::string CatalogPotential::id() const {
    std::ostringstream os;
    os.precision(10);
    os << tag() << '{';
    std::visit(
        [&os](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                os << "dim=" << p.dim;
            } else if constexpr (std::is_same_v<T, UniformForce>) {
                os << "F=" << p.F;
            } else if constexpr (std::is_same_v<T, GrowingForce>) {
                os << "k=" << p.k;
            } else if constexpr (std::is_same_v<T, RepulsiveOsc>) {
                os << "omega=" << p.omega;
            } else if constexpr (std::is_same_v<T, InverseSquare>) {
                os << "k=" << p.k;
            } else {
                for (std::size_t i = 0; i < p.blocks.size(); ++i) {
                    os << (i ? ";" : "") << '@' << p.blocks[i].offset << ':'
                       << p.blocks[i].potential.id();
                }
            }
        },
        v_);
    os << '}';
    return os.str();
}

inline double catalog_potential(const CatalogPotential& spec, const PhysConsts& consts,
                                std::span<const double> x, double t) {
    require(x.size() == spec.dim(), ErrorCode::DimensionMismatch,
            "point dimension does not match potential " + std::string(spec.tag()));
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ZeroPotential>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, UniformForce>) {
                return -p.F * x[0];
            } else if constexpr (std::is_same_v<T, GrowingForce>) {
                return -p.k * t * x[0];
            } else if constexpr (std::is_same_v<T, RepulsiveOsc>) {
                return -0.5 * consts.m * p.omega * p.omega * (x[0] * x[0] + x[1] * x[1]);
            } else if constexpr (std::is_same_v<T, InverseSquare>) {
                const double r2 = x[0] * x[0] + x[1] * x[1];
                require(r2 > 0.0, ErrorCode::SingularPoint,
                        "InverseSquare potential is singular at the origin");
                return -p.k / r2;
            } else {
                double sum = 0.0;
                for (const auto& block : p.blocks) {
                    sum += catalog_potential(block.potential, consts,
                                             x.subspan(block.offset, block.potential.dim()), t);
                }
                return sum;
            }
        },
        spec.variant());
}

/// The closed-form potential a catalog family produces, if there is one (GeneralLinear1D and AnalyticPoly2D have none).
inline std::optional<CatalogPotential> matching_catalog(const HarmonicFamily& family) {
    return std::visit(
        [](const auto& f) -> std::optional<CatalogPotential> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Free1D>) {
                return CatalogPotential(ZeroPotential{1});
            } else if constexpr (std::is_same_v<T, ConstantForce1D>) {
                return CatalogPotential(UniformForce{f.F});
            } else if constexpr (std::is_same_v<T, GrowingForce1D>) {
                return CatalogPotential(GrowingForce{f.k});
            } else if constexpr (std::is_same_v<T, RepulsiveOscillator2D>) {
                return CatalogPotential(RepulsiveOsc{f.omega});
            } else if constexpr (std::is_same_v<T, LogCentral2D>) {
                return CatalogPotential(InverseSquare{f.k});
            } else if constexpr (std::is_same_v<T, Composite>) {
                CompositeSum sum;
                for (const auto& block : f.blocks) {
                    auto part = matching_catalog(block.family);
                    if (!part) {
                        return std::nullopt;
                    }
                    sum.blocks.push_back({std::move(*part), block.offset});
                }
                return CatalogPotential(std::move(sum));
            } else {
                return std::nullopt;
            }
        },
        family.variant());
}

// ---------------------------------------------------------------------------
// PotentialSpec: synthesized from a family, or taken from the catalog
// ---------------------------------------------------------------------------

struct Synthesized {
    HarmonicFamily family;
    GaugeField gauge = ZeroGauge{};
};

struct PotentialSpec {
    std::variant<Synthesized, CatalogPotential> source;

    std::size_t dim() const {
        return std::visit(
            [](const auto& s) -> std::size_t {
                if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Synthesized>) {
                    return s.family.dim();
                } else {
                    return s.dim();
                }
            },
            source);
    }

    std::string id() const {
        if (const auto* s = std::get_if<Synthesized>(&source)) {
            return "Synthesized{" + s->family.id() + "}";
        }
        return std::get<CatalogPotential>(source).id();
    }
};

inline double potential_value(const PotentialSpec& spec, const PhysConsts& consts,
                              std::span<const double> x, double t) {
    if (const auto* s = std::get_if<Synthesized>(&spec.source)) {
        return synth_potential(s->family, s->gauge, consts, x, t);
    }
    return catalog_potential(std::get<CatalogPotential>(spec.source), consts, x, t);
}

/// Type-erased potential V(x, t).
using PotentialFn = std::function<double(std::span<const double>, double)>;

inline PotentialFn make_potential(const PotentialSpec& spec, const PhysConsts& consts) {
    return [spec, consts](std::span<const double> x, double t) {
        return potential_value(spec, consts, x, t);
    };
}

/// V synthesized from an arbitrary action source, so that S closes the
/// Hamilton-Jacobi equation for that V.
inline PotentialFn synthesized_potential(const Action& action, const GaugeField& gauge,
                                         const PhysConsts& consts) {
    check_gauge(gauge, action.dim);
    return [action, gauge, consts](std::span<const double> x, double t) {
        return synth_from_eval(action.eval(x, t), gauge, consts, x);
    };
}

// ---------------------------------------------------------------------------
// Exact wavefunction
// ---------------------------------------------------------------------------

inline complex exact_wavefunction(const HarmonicFamily& family, const PhysConsts& consts,
                                  std::span<const double> x, double t) {
    return std::polar(1.0, eval_action(family, consts, x, t).S / consts.hbar);
}

}  // namespace hjlab
