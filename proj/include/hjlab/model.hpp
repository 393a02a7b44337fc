#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/time_coefficient.hpp"

namespace hjlab {

inline constexpr std::size_t kMaxDim = 3;

/// Physical constants carried symbolically through every formula.
struct PhysConsts {
    double hbar = 1.0;
    double m = 1.0;
    double e = 1.0;
    double c = 1.0;

    void validate() const {
        require(hbar > 0.0 && m > 0.0 && c > 0.0 && std::isfinite(hbar) && std::isfinite(m) &&
                    std::isfinite(c) && std::isfinite(e),
                ErrorCode::InvalidArgument, "PhysConsts requires hbar > 0, m > 0, c > 0");
    }

    friend bool operator==(const PhysConsts&, const PhysConsts&) = default;
};

// ---------------------------------------------------------------------------
// Catalog of harmonic generating functions S(x, t).
// ---------------------------------------------------------------------------

/// S = P x - P^2 t / 2m.
struct Free1D {
    double P = 0.0;
};

/// S = (F t + P) x - (F t + P)^3 / 6 m F. Requires F != 0.
struct ConstantForce1D {
    double F = 1.0;
    double P = 0.0;
};

/// S = (k t^2/2 + P) x - (k^2 t^5/20 + k P t^3/3 + P^2 t) / 2m. Requires k != 0.
struct GrowingForce1D {
    double k = 1.0;
    double P = 0.0;
};

/// S = alpha(t) x + beta(t), with beta' = -alpha^2 / 2m and beta(0) = beta0.
struct GeneralLinear1D {
    TimeCoefficient alpha;
    double beta0 = 0.0;
};

/// S = Re sum_j c_j(t) z^j, z = x + i y.
struct AnalyticPoly2D {
    std::vector<TimeCoefficient> coeffs;
};

/// S = (m w/2)(x^2 - y^2) + P1 e^{-wt} x + P2 e^{wt} y + (P1^2 e^{-2wt} - P2^2 e^{2wt}) / 4 m w.
struct RepulsiveOscillator2D {
    double omega = 1.0;
    double P1 = 0.0;
    double P2 = 0.0;
};

/// S = sqrt(m k / 2) ln(x^2 + y^2). Singular at the origin.
struct LogCentral2D {
    double k = 1.0;
};

struct CompositeBlock;

/// Families acting on disjoint, contiguous coordinate slices; S is the sum.
struct Composite {
    std::vector<CompositeBlock> blocks;
};

class HarmonicFamily {
public:
    using Variant = std::variant<Free1D, ConstantForce1D, GrowingForce1D, GeneralLinear1D,
                                 AnalyticPoly2D, RepulsiveOscillator2D, LogCentral2D, Composite>;

    template <typename Alt>
        requires std::constructible_from<Variant, Alt>
    HarmonicFamily(Alt alt) : v_(std::move(alt)) {
        validate();
    }

    const Variant& variant() const { return v_; }

    template <typename Alt>
    const Alt* get_if() const {
        return std::get_if<Alt>(&v_);
    }

    std::size_t dim() const;
    std::string_view tag() const;
    /// Tag plus parameters, used to label reports.
    std::string id() const;

private:
    void validate() const;

    Variant v_;
};

struct CompositeBlock {
    HarmonicFamily family;
    std::size_t offset = 0;
};

/// S and its analytic first derivatives and Laplacian at one point.
struct ActionEval {
    double S = 0.0;
    std::array<double, kMaxDim> grad{};
    std::size_t dim = 0;
    double dSdt = 0.0;
    double lapS = 0.0;

    std::span<const double> gradient() const { return {grad.data(), dim}; }

    double grad_norm2() const {
        double sum = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            sum += grad[i] * grad[i];
        }
        return sum;
    }
};

// ---------------------------------------------------------------------------
// Term-algebra helpers
// ---------------------------------------------------------------------------

/// beta(t) = beta0 - (1/2m) * integral_0^t alpha(s)^2 ds, exact in the term algebra.
inline TimeCoefficient linear1d_beta(const TimeCoefficient& alpha, double m, double beta0) {
    require(alpha.is_real(), ErrorCode::InvalidArgument, "alpha must be real-valued");
    require(m > 0.0, ErrorCode::InvalidArgument, "mass must be positive");
    const TimeCoefficient integral = (alpha * alpha).integral_from_zero();
    return TimeCoefficient::constant(beta0) + complex(-0.5 / m, 0.0) * integral;
}

struct Analytic2D {
    complex f;
    complex fprime;
    complex dfdt;
};

/// f = sum c_j(t) z^j, f' = sum j c_j(t) z^(j-1), df/dt = sum c_j'(t) z^j.
inline Analytic2D analytic2d_derivatives(std::span<const TimeCoefficient> coeffs, double x,
                                         double y, double t) {
    require(!coeffs.empty(), ErrorCode::InvalidArgument, "analytic polynomial needs coefficients");
    const complex z{x, y};
    Analytic2D out{};
    complex zpow{1.0, 0.0};  // z^j
    complex zpow_prev{0.0, 0.0};  // z^(j-1)
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        const complex cj = coeffs[j](t);
        out.f += cj * zpow;
        if (j > 0) {
            out.fprime += static_cast<double>(j) * cj * zpow_prev;
        }
        out.dfdt += coeffs[j].derivative()(t) * zpow;
        zpow_prev = zpow;
        zpow *= z;
    }
    return out;
}

// ---------------------------------------------------------------------------
// HarmonicFamily members
// ---------------------------------------------------------------------------

inline std::size_t HarmonicFamily::dim() const {
    return std::visit(
        [](const auto& fam) -> std::size_t {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Free1D> || std::is_same_v<T, ConstantForce1D> ||
                          std::is_same_v<T, GrowingForce1D> ||
                          std::is_same_v<T, GeneralLinear1D>) {
                return 1;
            } else if constexpr (std::is_same_v<T, Composite>) {
                std::size_t total = 0;
                for (const auto& block : fam.blocks) {
                    total += block.family.dim();
                }
                return total;
            } else {
                return 2;
            }
        },
        v_);
}

inline std::string_view HarmonicFamily::tag() const {
    static constexpr std::array<std::string_view, 8> kTags = {
        "Free1D",         "ConstantForce1D",       "GrowingForce1D", "GeneralLinear1D",
        "AnalyticPoly2D", "RepulsiveOscillator2D", "LogCentral2D",   "Composite"};
    return kTags[v_.index()];
}

inline std::string HarmonicFamily::id() const {
    std::ostringstream os;
    os.precision(10);
    os << tag() << '{';
    std::visit(
        [&os](const auto& fam) {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Free1D>) {
                os << "P=" << fam.P;
            } else if constexpr (std::is_same_v<T, ConstantForce1D>) {
                os << "F=" << fam.F << ",P=" << fam.P;
            } else if constexpr (std::is_same_v<T, GrowingForce1D>) {
                os << "k=" << fam.k << ",P=" << fam.P;
            } else if constexpr (std::is_same_v<T, GeneralLinear1D>) {
                os << "terms=" << fam.alpha.terms().size() << ",beta0=" << fam.beta0;
            } else if constexpr (std::is_same_v<T, AnalyticPoly2D>) {
                os << "deg=" << fam.coeffs.size() - 1;
            } else if constexpr (std::is_same_v<T, RepulsiveOscillator2D>) {
                os << "omega=" << fam.omega << ",P1=" << fam.P1 << ",P2=" << fam.P2;
            } else if constexpr (std::is_same_v<T, LogCentral2D>) {
                os << "k=" << fam.k;
            } else {
                for (std::size_t i = 0; i < fam.blocks.size(); ++i) {
                    os << (i ? ";" : "") << '@' << fam.blocks[i].offset << ':'
                       << fam.blocks[i].family.id();
                }
            }
        },
        v_);
    os << '}';
    return os.str();
}

inline void HarmonicFamily::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    std::visit(
        [&](const auto& fam) {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, Free1D>) {
                require(finite(fam.P), ErrorCode::InvalidArgument, "Free1D: P must be finite");
            } else if constexpr (std::is_same_v<T, ConstantForce1D>) {
                require(finite(fam.F) && finite(fam.P), ErrorCode::InvalidArgument,
                        "ConstantForce1D: parameters must be finite");
                require(fam.F != 0.0, ErrorCode::InvalidArgument,
                        "ConstantForce1D: F must be nonzero (use Free1D for F = 0)");
            } else if constexpr (std::is_same_v<T, GrowingForce1D>) {
                require(finite(fam.k) && finite(fam.P), ErrorCode::InvalidArgument,
                        "GrowingForce1D: parameters must be finite");
                require(fam.k != 0.0, ErrorCode::InvalidArgument,
                        "GrowingForce1D: k must be nonzero");
            } else if constexpr (std::is_same_v<T, GeneralLinear1D>) {
                require(fam.alpha.is_real(), ErrorCode::InvalidArgument,
                        "GeneralLinear1D: alpha must be real-valued");
                require(finite(fam.beta0), ErrorCode::InvalidArgument,
                        "GeneralLinear1D: beta0 must be finite");
            } else if constexpr (std::is_same_v<T, AnalyticPoly2D>) {
                require(!fam.coeffs.empty(), ErrorCode::InvalidArgument,
                        "AnalyticPoly2D: coefficient list is empty");
            } else if constexpr (std::is_same_v<T, RepulsiveOscillator2D>) {
                require(finite(fam.omega) && fam.omega > 0.0, ErrorCode::InvalidArgument,
                        "RepulsiveOscillator2D: omega must be positive");
                require(finite(fam.P1) && finite(fam.P2), ErrorCode::InvalidArgument,
                        "RepulsiveOscillator2D: P1, P2 must be finite");
            } else if constexpr (std::is_same_v<T, LogCentral2D>) {
                require(finite(fam.k) && fam.k > 0.0, ErrorCode::InvalidArgument,
                        "LogCentral2D: k must be positive");
            } else {
                require(!fam.blocks.empty(), ErrorCode::InvalidArgument,
                        "Composite: no blocks");
                // Slices must tile [0, dim) without gaps or overlap.
                std::vector<std::pair<std::size_t, std::size_t>> ranges;
                for (const auto& block : fam.blocks) {
                    ranges.emplace_back(block.offset, block.family.dim());
                }
                std::sort(ranges.begin(), ranges.end());
                std::size_t next = 0;
                for (const auto& [offset, width] : ranges) {
                    require(offset == next, ErrorCode::InvalidArgument,
                            "Composite: blocks must cover disjoint, contiguous axis ranges");
                    next = offset + width;
                }
                require(next <= kMaxDim, ErrorCode::InvalidArgument,
                        "Composite: total dimension exceeds 3");
            }
        },
        v_);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline ActionEval eval_family(const HarmonicFamily& family, const PhysConsts& k,
                              std::span<const double> x, double t);

inline ActionEval eval_one(const Free1D& f, const PhysConsts& k, std::span<const double> x,
                           double t) {
    ActionEval out{.dim = 1};
    out.S = f.P * x[0] - f.P * f.P * t / (2.0 * k.m);
    out.grad[0] = f.P;
    out.dSdt = -f.P * f.P / (2.0 * k.m);
    return out;
}

inline ActionEval eval_one(const ConstantForce1D& f, const PhysConsts& k,
                           std::span<const double> x, double t) {
    const double u = f.F * t + f.P;
    ActionEval out{.dim = 1};
    out.S = u * x[0] - u * u * u / (6.0 * k.m * f.F);
    out.grad[0] = u;
    out.dSdt = f.F * x[0] - u * u / (2.0 * k.m);
    return out;
}

inline ActionEval eval_one(const GrowingForce1D& f, const PhysConsts& k,
                           std::span<const double> x, double t) {
    const double alpha = 0.5 * f.k * t * t + f.P;
    const double t3 = t * t * t;
    const double beta =
        -(f.k * f.k * t3 * t * t / 20.0 + f.k * f.P * t3 / 3.0 + f.P * f.P * t) / (2.0 * k.m);
    ActionEval out{.dim = 1};
    out.S = alpha * x[0] + beta;
    out.grad[0] = alpha;
    out.dSdt = f.k * t * x[0] - alpha * alpha / (2.0 * k.m);
    return out;
}

inline ActionEval eval_linear(const TimeCoefficient& alpha, const TimeCoefficient& beta,
                              std::span<const double> x, double t) {
    const double a = alpha.real_at(t);
    ActionEval out{.dim = 1};
    out.S = a * x[0] + beta.real_at(t);
    out.grad[0] = a;
    out.dSdt = alpha.derivative().real_at(t) * x[0] + beta.derivative().real_at(t);
    return out;
}

inline ActionEval eval_one(const GeneralLinear1D& f, const PhysConsts& k,
                           std::span<const double> x, double t) {
    return eval_linear(f.alpha, linear1d_beta(f.alpha, k.m, f.beta0), x, t);
}

inline ActionEval eval_one(const AnalyticPoly2D& f, const PhysConsts&, std::span<const double> x,
                           double t) {
    const Analytic2D d = analytic2d_derivatives(f.coeffs, x[0], x[1], t);
    ActionEval out{.dim = 2};
    out.S = d.f.real();
    out.grad[0] = d.fprime.real();
    out.grad[1] = -d.fprime.imag();
    out.dSdt = d.dfdt.real();
    return out;
}

inline ActionEval eval_one(const RepulsiveOscillator2D& f, const PhysConsts& k,
                           std::span<const double> x, double t) {
    const double w = f.omega;
    const double decay = std::exp(-w * t);
    const double grow = std::exp(w * t);
    const double mw = k.m * w;
    ActionEval out{.dim = 2};
    out.S = 0.5 * mw * (x[0] * x[0] - x[1] * x[1]) + f.P1 * decay * x[0] + f.P2 * grow * x[1] +
            (f.P1 * f.P1 * decay * decay - f.P2 * f.P2 * grow * grow) / (4.0 * mw);
    out.grad[0] = mw * x[0] + f.P1 * decay;
    out.grad[1] = -mw * x[1] + f.P2 * grow;
    out.dSdt = -w * f.P1 * decay * x[0] + w * f.P2 * grow * x[1] -
               (f.P1 * f.P1 * decay * decay + f.P2 * f.P2 * grow * grow) / (2.0 * k.m);
    return out;
}

inline ActionEval eval_one(const LogCentral2D& f, const PhysConsts& k, std::span<const double> x,
                           double) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    require(r2 > 0.0, ErrorCode::SingularPoint, "LogCentral2D is singular at the origin");
    const double amp = std::sqrt(k.m * f.k / 2.0);
    ActionEval out{.dim = 2};
    out.S = amp * std::log(r2);
    out.grad[0] = 2.0 * amp * x[0] / r2;
    out.grad[1] = 2.0 * amp * x[1] / r2;
    return out;
}

inline ActionEval eval_one(const Composite& f, const PhysConsts& k, std::span<const double> x,
                           double t) {
    ActionEval out{};
    for (const auto& block : f.blocks) {
        const std::size_t width = block.family.dim();
        const ActionEval part = eval_family(block.family, k, x.subspan(block.offset, width), t);
        out.S += part.S;
        out.dSdt += part.dSdt;
        out.lapS += part.lapS;
        for (std::size_t i = 0; i < width; ++i) {
            out.grad[block.offset + i] = part.grad[i];
        }
        out.dim += width;
    }
    return out;
}

inline ActionEval eval_family(const HarmonicFamily& family, const PhysConsts& k,
                              std::span<const double> x, double t) {
    return std::visit([&](const auto& fam) { return eval_one(fam, k, x, t); }, family.variant());
}

}  // namespace detail

/// S, grad S, dS/dt and the analytic Laplacian (identically zero for every
/// catalog member) of `family` at (x, t).
inline ActionEval eval_action(const HarmonicFamily& family, const PhysConsts& consts,
                              std::span<const double> x, double t) {
    require(x.size() == family.dim(), ErrorCode::DimensionMismatch,
            "point has dimension " + std::to_string(x.size()) + ", family " +
                std::string(family.tag()) + " has dimension " + std::to_string(family.dim()));
    return detail::eval_family(family, consts, x, t);
}

// ---------------------------------------------------------------------------
// Type-erased action source
// ---------------------------------------------------------------------------

/// A closed-form action S(x, t) with analytic derivatives. Families are the
/// main source; the verification engine also accepts non-harmonic test actions.
struct Action {
    std::string id;
    std::size_t dim = 1;
    std::function<ActionEval(std::span<const double>, double)> eval;
};

inline Action make_action(const HarmonicFamily& family, const PhysConsts& consts) {
    consts.validate();
    if (const auto* lin = family.get_if<GeneralLinear1D>()) {
        // beta only depends on (alpha, m); build it once instead of per point.
        TimeCoefficient beta = linear1d_beta(lin->alpha, consts.m, lin->beta0);
        return {family.id(), 1,
                [alpha = lin->alpha, beta = std::move(beta)](std::span<const double> x, double t) {
                    require(x.size() == 1, ErrorCode::DimensionMismatch,
                            "GeneralLinear1D expects a 1D point");
                    return detail::eval_linear(alpha, beta, x, t);
                }};
    }
    return {family.id(), family.dim(), [family, consts](std::span<const double> x, double t) {
                return eval_action(family, consts, x, t);
            }};
}

/// Non-harmonic 1D test action S = coefficient * x^power (time independent).
inline Action monomial_action(int power, double coefficient = 1.0) {
    require(power >= 0, ErrorCode::InvalidArgument, "monomial power must be nonnegative");
    std::ostringstream os;
    os << "Monomial1D{" << coefficient << "*x^" << power << '}';
    return {os.str(), 1, [power, coefficient](std::span<const double> x, double) {
                require(x.size() == 1, ErrorCode::DimensionMismatch,
                        "monomial test action expects a 1D point");
                const double p = power;
                ActionEval out{.dim = 1};
                out.S = coefficient * std::pow(x[0], power);
                out.grad[0] = power >= 1 ? coefficient * p * std::pow(x[0], power - 1) : 0.0;
                out.lapS = power >= 2 ? coefficient * p * (p - 1.0) * std::pow(x[0], power - 2) : 0.0;
                return out;
            }};
}

/// Replaces the free momentum parameter of a 1D family; used to build
/// superpositions over P.
inline HarmonicFamily with_momentum(const HarmonicFamily& family, double P) {
    if (family.get_if<Free1D>() != nullptr) {
        return Free1D{P};
    }
    if (const auto* f = family.get_if<ConstantForce1D>()) {
        return ConstantForce1D{f->F, P};
    }
    if (const auto* f = family.get_if<GrowingForce1D>()) {
        return GrowingForce1D{f->k, P};
    }
    fail(ErrorCode::InvalidArgument,
         std::string(family.tag()) + " has no single free momentum parameter P");
}

}  // namespace hjlab
