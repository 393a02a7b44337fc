#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"
#include "hjlab/synth.hpp"

namespace hjlab {

/// Relative tolerance for identities that hold analytically (no stencil).
inline constexpr double kAnalyticTolerance = 1e-12;
/// Relative tolerance under which a finite-difference residual counts as
/// exact (stencil is exact on the sampled function).
inline constexpr double kExactnessTolerance = 1e-10;
/// Half-width of the accepted order window, as a fraction of the nominal order.
inline constexpr double kOrderWindowFraction = 0.1;
/// Resolution guard: h * max|dS/dx| / hbar per axis.
inline constexpr double kMaxPhasePerCell = 0.5;

enum class CheckKind { Laplace, HamiltonJacobi, Schrodinger, EquivalenceIdentity, OperatorEigen };

inline std::string_view to_string(CheckKind kind) {
    switch (kind) {
        case CheckKind::Laplace: return "Laplace";
        case CheckKind::HamiltonJacobi: return "HamiltonJacobi";
        case CheckKind::Schrodinger: return "Schrodinger";
        case CheckKind::EquivalenceIdentity: return "EquivalenceIdentity";
        case CheckKind::OperatorEigen: return "OperatorEigen";
    }
    return "Unknown";
}

enum class OrderStatus { Absent, Estimated, NotApplicable };

/// Outcome of one residual check on one grid at one time. `rel` and `pass`
/// are derived from the stored fields, never stored themselves.
struct ResidualReport {
    CheckKind check = CheckKind::Laplace;
    std::string family;
    std::string grid;
    double t = 0.0;
    double h = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
    double scale = 0.0;
    double tolerance = kAnalyticTolerance;
    /// Stencil order for finite-difference checks, 0 for analytic ones.
    int nominal_order = 0;
    OrderStatus order_status = OrderStatus::Absent;
    double order_estimate = std::numeric_limits<double>::quiet_NaN();
    std::string warning;

    double rel() const {
        if (linf == 0.0) {
            return 0.0;
        }
        return scale > 0.0 ? linf / scale : std::numeric_limits<double>::infinity();
    }

    double order_low() const { return nominal_order * (1.0 - kOrderWindowFraction); }
    double order_high() const { return nominal_order * (1.0 + kOrderWindowFraction); }

    bool pass() const {
        if (order_status == OrderStatus::Estimated) {
            return order_estimate >= order_low() && order_estimate <= order_high();
        }
        return rel() <= tolerance;
    }
};

template <typename T>
struct ResidualSample {
    Field<T> residual;
    InteriorMask mask{0};
    double scale = 0.0;
    std::string warning;
};

namespace detail {

template <typename T>
ResidualReport make_report(CheckKind kind, std::string id, const ResidualSample<T>& sample,
                           double t, double tolerance, int order) {
    const Norms n = norms(sample.residual, sample.mask);
    ResidualReport r;
    r.check = kind;
    r.family = std::move(id);
    r.grid = sample.residual.grid.summary();
    r.t = t;
    r.h = sample.residual.grid.max_spacing();
    r.l2 = n.l2;
    r.linf = n.linf;
    r.scale = sample.scale;
    r.tolerance = tolerance;
    r.nominal_order = order;
    r.warning = sample.warning;
    return r;
}

inline std::span<const double> pt(const std::array<double, kMaxDim>& x, std::size_t dim) {
    return {x.data(), dim};
}

inline void check_dims(const Action& action, const GridSpec& grid) {
    require(action.dim == grid.dim(), ErrorCode::DimensionMismatch,
            "action " + action.id + " has dimension " + std::to_string(action.dim) +
                " but the grid has dimension " + std::to_string(grid.dim()));
}

/// Flags grids that do not resolve the local wavelength of exp(iS/hbar).
inline std::string resolution_warning(const Action& action, const PhysConsts& consts,
                                      const GridSpec& grid, double t) {
    std::array<double, kMaxDim> max_grad{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        const ActionEval a = action.eval(pt(x, grid.dim()), t);
        for (std::size_t d = 0; d < grid.dim(); ++d) {
            max_grad[d] = std::max(max_grad[d], std::abs(a.grad[d]));
        }
    }
    std::ostringstream os;
    for (std::size_t d = 0; d < grid.dim(); ++d) {
        const double phase = grid.axis(d).spacing() * max_grad[d] / consts.hbar;
        if (phase > kMaxPhasePerCell) {
            os << (os.tellp() > 0 ? "; " : "") << "axis " << d << " under-resolved (h*|dS|/hbar="
               << phase << ")";
        }
    }
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Laplace residual
// ---------------------------------------------------------------------------

/// fd_laplacian of sampled S. The scale is the largest single weighted tap
/// |w_k S_j| / h^2 entering the stencil, i.e. the round-off scale of the sum.
inline ResidualSample<double> laplace_residual_field(const Action& action, const GridSpec& grid,
                                                     double t, int order) {
    detail::check_dims(action, grid);
    const ScalarField S = sample(
        [&](std::span<const double> x, double tt) { return action.eval(x, tt).S; }, grid, t);
    ResidualSample<double> out{fd_laplacian(S, order), InteriorMask{detail::half_width(order)}, 0.0, {}};
    const auto taps = laplacian_taps(order);
    const std::size_t hw = taps.size() / 2;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!out.mask.contains(grid, i)) {
            continue;
        }
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            const double h = grid.axis(a).spacing();
            const std::size_t stride = grid.stride(a);
            for (std::size_t k = 0; k < taps.size(); ++k) {
                const double term = std::abs(taps[k] * S.values[i + k * stride - hw * stride]);
                out.scale = std::max(out.scale, term / (h * h));
            }
        }
    }
    return out;
}

inline ResidualReport laplace_residual(const Action& action, const GridSpec& grid, double t,
                                       int order) {
    return detail::make_report(CheckKind::Laplace, action.id,
                               laplace_residual_field(action, grid, t, order), t,
                               kExactnessTolerance, order);
}

inline ResidualReport laplace_residual(const HarmonicFamily& family, const PhysConsts& consts,
                                       const GridSpec& grid, double t, int order) {
    return laplace_residual(make_action(family, consts), grid, t, order);
}

// ---------------------------------------------------------------------------
// Hamilton-Jacobi residual (analytic derivatives, no stencil)
// ---------------------------------------------------------------------------

/// (1/2m)|grad S - (e/c)A|^2 + V + dS/dt at every node.
inline ResidualSample<double> hj_residual_field(const Action& action, const PotentialFn& potential,
                                                const GaugeField& gauge, const PhysConsts& consts,
                                                const GridSpec& grid, double t) {
    detail::check_dims(action, grid);
    check_gauge(gauge, grid.dim());
    ResidualSample<double> out{ScalarField(grid), InteriorMask{0}, 0.0, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto xa = grid.point(i);
        const auto x = detail::pt(xa, grid.dim());
        const ActionEval a = action.eval(x, t);
        const auto A = vector_potential(gauge, x);
        double kin = 0.0;
        for (std::size_t d = 0; d < a.dim; ++d) {
            const double p = a.grad[d] - (consts.e / consts.c) * A[d];
            kin += p * p;
        }
        kin /= 2.0 * consts.m;
        const double V = potential(x, t);
        const double r = kin + V + a.dSdt;
        require(std::isfinite(r), ErrorCode::NonFinite, "non-finite HJ residual");
        out.residual.values[i] = r;
        out.scale = std::max({out.scale, std::abs(a.dSdt), a.grad_norm2() / (2.0 * consts.m),
                              kin, std::abs(V)});
    }
    return out;
}

inline ResidualReport hj_residual(const Action& action, const PotentialFn& potential,
                                  const std::string& potential_id, const GaugeField& gauge,
                                  const PhysConsts& consts, const GridSpec& grid, double t) {
    return detail::make_report(CheckKind::HamiltonJacobi, action.id + " | V=" + potential_id,
                               hj_residual_field(action, potential, gauge, consts, grid, t), t,
                               kAnalyticTolerance, 0);
}

inline ResidualReport hj_residual(const HarmonicFamily& family, const PotentialSpec& potential,
                                  const GaugeField& gauge, const PhysConsts& consts,
                                  const GridSpec& grid, double t) {
    return hj_residual(make_action(family, consts), make_potential(potential, consts),
                       potential.id(), gauge, consts, grid, t);
}

// ---------------------------------------------------------------------------
// Schrodinger residual of psi = exp(iS/hbar)
// ---------------------------------------------------------------------------

/// -(hbar^2/2m) lap psi + (i hbar e/mc) A.grad psi + (e^2/2mc^2)|A|^2 psi + V psi - i hbar dpsi/dt
/// with spatial derivatives from stencils and dpsi/dt = (i/hbar)(dS/dt) psi.
inline ResidualSample<complex> schrodinger_residual_field(const Action& action,
                                                          const PotentialFn& potential,
                                                          const GaugeField& gauge,
                                                          const PhysConsts& consts,
                                                          const GridSpec& grid, double t,
                                                          int order) {
    detail::check_dims(action, grid);
    check_gauge(gauge, grid.dim());
    detail::check_stencil_fits(grid, order);
    const double hbar = consts.hbar;
    const complex I{0.0, 1.0};

    ComplexField psi(grid);
    std::vector<double> dSdt(grid.size());
    std::vector<double> V(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto xa = grid.point(i);
        const auto x = detail::pt(xa, grid.dim());
        const ActionEval a = action.eval(x, t);
        psi.values[i] = std::polar(1.0, a.S / hbar);
        dSdt[i] = a.dSdt;
        V[i] = potential(x, t);
        require(std::isfinite(V[i]) && std::isfinite(a.S), ErrorCode::NonFinite,
                "non-finite action or potential sample");
    }

    const ComplexField lap = fd_laplacian(psi, order);
    std::vector<ComplexField> grad;
    if (!is_zero_gauge(gauge)) {
        grad = fd_gradient(psi, order);
    }

    ResidualSample<complex> out{ComplexField(grid), InteriorMask{detail::half_width(order)}, 0.0, {}};
    const double kinetic = hbar * hbar / (2.0 * consts.m);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!out.mask.contains(grid, i)) {
            continue;
        }
        const complex p = psi.values[i];
        const complex dpsi_dt = (I / hbar) * dSdt[i] * p;
        complex r = -kinetic * lap.values[i] + V[i] * p - I * hbar * dpsi_dt;
        if (!is_zero_gauge(gauge)) {
            const auto xa = grid.point(i);
            const auto A = vector_potential(gauge, detail::pt(xa, grid.dim()));
            complex a_dot_grad{};
            double a2 = 0.0;
            for (std::size_t d = 0; d < grid.dim(); ++d) {
                a_dot_grad += A[d] * grad[d].values[i];
                a2 += A[d] * A[d];
            }
            r += (I * hbar * consts.e / (consts.m * consts.c)) * a_dot_grad +
                 (consts.e * consts.e / (2.0 * consts.m * consts.c * consts.c)) * a2 * p;
        }
        out.residual.values[i] = r;
        const double s = kinetic * std::abs(lap.values[i]) + std::abs(V[i] * p) +
                         hbar * std::abs(dpsi_dt);
        out.scale = std::max(out.scale, s);
    }
    out.warning = detail::resolution_warning(action, consts, grid, t);
    return out;
}

inline ResidualReport schrodinger_residual(const Action& action, const PotentialFn& potential,
                                           const std::string& potential_id,
                                           const GaugeField& gauge, const PhysConsts& consts,
                                           const GridSpec& grid, double t, int order) {
    return detail::make_report(
        CheckKind::Schrodinger, action.id + " | V=" + potential_id,
        schrodinger_residual_field(action, potential, gauge, consts, grid, t, order), t,
        kExactnessTolerance, order);
}

inline ResidualReport schrodinger_residual(const HarmonicFamily& family,
                                           const PotentialSpec& potential,
                                           const GaugeField& gauge, const PhysConsts& consts,
                                           const GridSpec& grid, double t, int order) {
    return schrodinger_residual(make_action(family, consts), make_potential(potential, consts),
                                potential.id(), gauge, consts, grid, t, order);
}

// ---------------------------------------------------------------------------
// Equivalence identity: Schrodinger residual == -(i hbar/2m)(lap S) psi when
// V closes the HJ equation, harmonic or not.
// ---------------------------------------------------------------------------

struct EquivalenceResult {
    ResidualReport difference;
    /// max |Schrodinger residual| over the interior
    double schrodinger_linf = 0.0;
    /// max |-(i hbar/2m)(lap S) psi| over the interior
    double reference_linf = 0.0;
};

inline EquivalenceResult equivalence_identity_check(const Action& action, const GaugeField& gauge,
                                                    const PhysConsts& consts,
                                                    const GridSpec& grid, double t, int order) {
    const PotentialFn V = synthesized_potential(action, gauge, consts);
    ResidualSample<complex> s =
        schrodinger_residual_field(action, V, gauge, consts, grid, t, order);
    const complex I{0.0, 1.0};
    EquivalenceResult out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!s.mask.contains(grid, i)) {
            continue;
        }
        const auto xa = grid.point(i);
        const ActionEval a = action.eval(detail::pt(xa, grid.dim()), t);
        const complex psi = std::polar(1.0, a.S / consts.hbar);
        const complex reference = -(I * consts.hbar / (2.0 * consts.m)) * a.lapS * psi;
        out.schrodinger_linf = std::max(out.schrodinger_linf, std::abs(s.residual.values[i]));
        out.reference_linf = std::max(out.reference_linf, std::abs(reference));
        s.residual.values[i] -= reference;
    }
    out.difference = detail::make_report(CheckKind::EquivalenceIdentity,
                                         action.id + " | V=synthesized", s, t,
                                         kExactnessTolerance, order);
    return out;
}

// ---------------------------------------------------------------------------
// Conserved operators O(t) = a(t)(-i hbar d_axis) + b(t) x_axis + c(t)
// ---------------------------------------------------------------------------

struct ConservedOperatorSpec {
    std::size_t axis = 0;
    TimeCoefficient a;
    TimeCoefficient b;
    TimeCoefficient c;
    double eigenvalue = 0.0;
    std::string label;

    void validate(std::size_t dim) const {
        require(axis < dim, ErrorCode::DimensionMismatch, "operator axis out of range");
        require(a.is_real() && b.is_real() && c.is_real(), ErrorCode::InvalidArgument,
                "operator coefficients must be real-valued");
    }
};

/// The conserved operators whose eigenfunctions the family's states are.
inline std::vector<ConservedOperatorSpec> predefined_operators(const HarmonicFamily& family,
                                                               const PhysConsts& consts) {
    using TC = TimeCoefficient;
    std::vector<ConservedOperatorSpec> ops;
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Free1D>) {
                ops.push_back({0, TC::constant(1.0), TC{}, TC{}, f.P, "p"});
            } else if constexpr (std::is_same_v<T, ConstantForce1D>) {
                ops.push_back({0, TC::constant(1.0), TC{}, TC::monomial(-f.F, 1), f.P, "p - F t"});
            } else if constexpr (std::is_same_v<T, GrowingForce1D>) {
                ops.push_back({0, TC::constant(1.0), TC{}, TC::monomial(-0.5 * f.k, 2), f.P,
                               "p - k t^2/2"});
            } else if constexpr (std::is_same_v<T, GeneralLinear1D>) {
                const double a0 = f.alpha.real_at(0.0);
                ops.push_back({0, TC::constant(1.0), TC{}, TC::constant(a0) - f.alpha, a0,
                               "p - (alpha(t) - alpha(0))"});
            } else if constexpr (std::is_same_v<T, RepulsiveOscillator2D>) {
                const double mw = consts.m * f.omega;
                ops.push_back({0, TC::monomial(1.0, 0, f.omega), TC::monomial(-mw, 0, f.omega),
                               TC{}, f.P1, "e^{w t}(p_x - m w x)"});
                ops.push_back({1, TC::monomial(1.0, 0, -f.omega), TC::monomial(mw, 0, -f.omega),
                               TC{}, f.P2, "e^{-w t}(p_y + m w y)"});
            } else if constexpr (std::is_same_v<T, Composite>) {
                for (const auto& block : f.blocks) {
                    for (auto op : predefined_operators(block.family, consts)) {
                        op.axis += block.offset;
                        op.label += " [axis " + std::to_string(op.axis) + "]";
                        ops.push_back(std::move(op));
                    }
                }
            }
        },
        family.variant());
    return ops;
}

/// Continuum identity a(t) dS/dx_axis + b(t) x_axis + c(t) - eigenvalue = 0,
/// using analytic derivatives only.
inline ResidualReport operator_eigencheck_analytic(const ConservedOperatorSpec& op,
                                                   const Action& action, const GridSpec& grid,
                                                   double t) {
    detail::check_dims(action, grid);
    op.validate(grid.dim());
    const double a = op.a.real_at(t);
    const double b = op.b.real_at(t);
    const double c = op.c.real_at(t);
    ResidualSample<double> out{ScalarField(grid), InteriorMask{0}, 0.0, {}};
    double max_term = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        const ActionEval e = action.eval(detail::pt(x, grid.dim()), t);
        out.residual.values[i] = a * e.grad[op.axis] + b * x[op.axis] + c - op.eigenvalue;
        max_term = std::max(max_term, std::abs(a * e.grad[op.axis]));
    }
    out.scale = std::abs(op.eigenvalue) + max_term;
    return detail::make_report(CheckKind::OperatorEigen, action.id + " | O=" + op.label +
                                                             " (analytic)",
                               out, t, kAnalyticTolerance, 0);
}

/// a(t)(-i hbar D psi) + b(t) x psi + c(t) psi - eigenvalue psi with a
/// centered-difference D.
inline ResidualReport operator_eigencheck(const ConservedOperatorSpec& op, const Action& action,
                                          const PhysConsts& consts, const GridSpec& grid,
                                          double t, int order) {
    detail::check_dims(action, grid);
    op.validate(grid.dim());
    const ComplexField psi = sample(
        [&](std::span<const double> x, double tt) {
            return std::polar(1.0, action.eval(x, tt).S / consts.hbar);
        },
        grid, t);
    const ComplexField dpsi = fd_derivative(psi, op.axis, order);
    const double a = op.a.real_at(t);
    const double b = op.b.real_at(t);
    const double c = op.c.real_at(t);
    const complex I{0.0, 1.0};
    ResidualSample<complex> out{ComplexField(grid), InteriorMask{detail::half_width(order)}, 0.0, {}};
    double max_term = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!out.mask.contains(grid, i)) {
            continue;
        }
        const auto x = grid.point(i);
        const complex p = psi.values[i];
        out.residual.values[i] =
            a * (-I * consts.hbar * dpsi.values[i]) + (b * x[op.axis] + c - op.eigenvalue) * p;
        max_term = std::max(max_term, std::abs(a * consts.hbar * dpsi.values[i]));
    }
    out.scale = std::abs(op.eigenvalue) + max_term;
    out.warning = detail::resolution_warning(action, consts, grid, t);
    return detail::make_report(CheckKind::OperatorEigen, action.id + " | O=" + op.label, out, t,
                               kExactnessTolerance, order);
}

// ---------------------------------------------------------------------------
// Refinement studies
// ---------------------------------------------------------------------------

struct RefinementStudy {
    std::vector<ResidualReport> levels;
    /// Order estimate for each consecutive pair; nullopt when not applicable.
    std::vector<std::optional<double>> pair_orders;
    std::optional<double> mean_order;

    bool pass() const {
        return std::all_of(levels.begin(), levels.end(),
                           [](const ResidualReport& r) { return r.pass(); });
    }
};

/// Grids must share dimension and extents, and every axis must double its
/// cell count from one level to the next.
inline void check_refinement_grids(std::span<const GridSpec> grids) {
    require(grids.size() >= 3, ErrorCode::InconsistentGrids,
            "a refinement study needs at least 3 grids");
    for (std::size_t g = 1; g < grids.size(); ++g) {
        const GridSpec& coarse = grids[g - 1];
        const GridSpec& fine = grids[g];
        require(coarse.dim() == fine.dim(), ErrorCode::InconsistentGrids,
                "refinement grids differ in dimension");
        for (std::size_t a = 0; a < coarse.dim(); ++a) {
            const Axis& ca = coarse.axis(a);
            const Axis& fa = fine.axis(a);
            require(ca.min == fa.min && ca.max == fa.max, ErrorCode::InconsistentGrids,
                    "refinement grids differ in extent");
            require(fa.n - 1 == 2 * (ca.n - 1), ErrorCode::InconsistentGrids,
                    "each refinement level must halve the spacing on every axis");
        }
    }
}

/// Runs `check(grid)` on every level and attaches order estimates
/// log2(l2_coarse / l2_fine). Level 0 carries the first pair's estimate,
/// level i >= 1 the estimate of pair (i-1, i).
template <typename Check>
RefinementStudy refinement_study(Check&& check, std::span<const GridSpec> grids) {
    check_refinement_grids(grids);
    RefinementStudy study;
    for (const auto& grid : grids) {
        study.levels.push_back(check(grid));
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t g = 1; g < study.levels.size(); ++g) {
        const ResidualReport& c = study.levels[g - 1];
        const ResidualReport& f = study.levels[g];
        if (c.nominal_order == 0) {
            study.pair_orders.push_back(std::nullopt);
            continue;
        }
        const bool exact = c.rel() <= c.tolerance && f.rel() <= f.tolerance;
        if (exact) {
            study.pair_orders.push_back(std::nullopt);
            continue;
        }
        const double est = (f.l2 > 0.0 && c.l2 > 0.0) ? std::log2(c.l2 / f.l2)
                                                       : std::numeric_limits<double>::infinity();
        study.pair_orders.push_back(est);
        if (std::isfinite(est)) {
            sum += est;
            ++count;
        }
    }
    if (count > 0) {
        study.mean_order = sum / static_cast<double>(count);
    }
    for (std::size_t g = 0; g < study.levels.size(); ++g) {
        ResidualReport& r = study.levels[g];
        if (r.nominal_order == 0) {
            continue;
        }
        const auto& est = study.pair_orders[g == 0 ? 0 : g - 1];
        if (est) {
            r.order_status = OrderStatus::Estimated;
            r.order_estimate = *est;
        } else {
            r.order_status = OrderStatus::NotApplicable;
        }
    }
    return study;
}

/// Grids with n-1 = base_cells * 2^level cells per axis over the given box.
inline std::vector<GridSpec> refinement_grids(const std::vector<Axis>& box,
                                              std::size_t base_cells, std::size_t levels) {
    std::vector<GridSpec> grids;
    for (std::size_t l = 0; l < levels; ++l) {
        std::vector<Axis> axes = box;
        for (auto& axis : axes) {
            axis.n = (base_cells << l) + 1;
        }
        grids.emplace_back(std::move(axes));
    }
    return grids;
}

}  // namespace hjlab
