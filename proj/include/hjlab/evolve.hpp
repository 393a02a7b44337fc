#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/model.hpp"
#include "hjlab/synth.hpp"

namespace hjlab {

/// Trapezoid rule over [pmin, pmax] with npts nodes.
struct Quadrature {
    double pmin = -1.0;
    double pmax = 1.0;
    std::size_t npts = 51;

    double step() const { return (pmax - pmin) / static_cast<double>(npts - 1); }

    void validate() const {
        require(npts >= 2 && pmax > pmin && std::isfinite(pmin) && std::isfinite(pmax),
                ErrorCode::InvalidArgument, "quadrature needs npts >= 2 and pmax > pmin");
    }

    /// (node, weight) pairs.
    std::vector<std::pair<double, double>> nodes() const {
        validate();
        std::vector<std::pair<double, double>> out;
        out.reserve(npts);
        const double dp = step();
        for (std::size_t i = 0; i < npts; ++i) {
            const double w = (i == 0 || i + 1 == npts) ? 0.5 * dp : dp;
            out.emplace_back(pmin + static_cast<double>(i) * dp, w);
        }
        return out;
    }
};

/// g(P) = exp(-(P - center)^2 / (2 sigma^2)).
struct GaussianWeight {
    double center = 0.0;
    double sigma = 1.0;

    double operator()(double P) const {
        const double u = (P - center) / sigma;
        return std::exp(-0.5 * u * u);
    }
};

/// Superposition of a 1D family's states over its momentum parameter P.
struct PacketSpec {
    HarmonicFamily family_template = Free1D{};
    GaussianWeight weight;
    Quadrature quadrature;

    void validate() const {
        require(family_template.dim() == 1, ErrorCode::InvalidArgument,
                "packet template must be a 1D family");
        require(weight.sigma > 0.0, ErrorCode::InvalidArgument, "sigmaP must be positive");
        require(quadrature.npts >= 51, ErrorCode::InvalidArgument,
                "packet quadrature needs at least 51 nodes");
        quadrature.validate();
        require(quadrature.pmin <= weight.center - 5.0 * weight.sigma &&
                    quadrature.pmax >= weight.center + 5.0 * weight.sigma,
                ErrorCode::InvalidArgument, "quadrature range must cover P0 +/- 5 sigmaP");
        with_momentum(family_template, weight.center);  // throws if P is not free
    }
};

/// Ghost copies of a P-superposition repeat every 2 pi hbar / dP in x; keep
/// them outside the grid.
inline void check_aliasing(double dp, const GridSpec& grid, double hbar) {
    const double extent = grid.axis(0).max - grid.axis(0).min;
    require(dp * extent / hbar <= std::numbers::pi, ErrorCode::QuadratureTooCoarse,
            "dP * (x extent) / hbar = " + std::to_string(dp * extent / hbar) + " exceeds pi");
}

/// psi(x, t) = sum_i weight_i exp(i S(x, t; P_i) / hbar).
inline ComplexField superpose(const HarmonicFamily& family_template, const PhysConsts& consts,
                              const GridSpec& grid, double t,
                              std::span<const std::pair<double, double>> terms) {
    require(grid.dim() == 1, ErrorCode::DimensionMismatch, "packets live on 1D grids");
    ComplexField out(grid);
    for (const auto& [P, w] : terms) {
        const HarmonicFamily family = with_momentum(family_template, P);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.axis(0).coord(i);
            out.values[i] += w * exact_wavefunction(family, consts, std::span<const double>(&x, 1), t);
        }
    }
    return out;
}

/// Trapezoid quadrature of g(P) exp(i S(x, t; P)/hbar) over P. Not normalized.
inline ComplexField build_packet(const PacketSpec& spec, const PhysConsts& consts,
                                 const GridSpec& grid, double t) {
    spec.validate();
    require(grid.dim() == 1, ErrorCode::DimensionMismatch, "packets live on 1D grids");
    check_aliasing(spec.quadrature.step(), grid, consts.hbar);
    auto terms = spec.quadrature.nodes();
    for (auto& [P, w] : terms) {
        w *= spec.weight(P);
    }
    return superpose(spec.family_template, consts, grid, t, terms);
}

/// sqrt(sum |psi|^2 h) over the whole grid.
inline double l2_norm(const ComplexField& psi) {
    return norms(psi, InteriorMask{0}).l2;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson propagation
// ---------------------------------------------------------------------------

struct PropagatorConfig {
    double dt = 1e-3;
    double duration = 0.0;
    double t0 = 0.0;
    /// Step from t0 down to t0 - duration instead of up.
    bool backward = false;
    /// Record a snapshot every `snapshot_stride` steps (0: none).
    std::size_t snapshot_stride = 0;

    std::size_t steps() const {
        require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "dt must be positive");
        require(duration >= 0.0 && std::isfinite(duration), ErrorCode::InvalidArgument,
                "duration must be nonnegative");
        const double ratio = duration / dt;
        const double n = std::round(ratio);
        require(std::abs(ratio - n) <= 1e-9 * std::max(1.0, ratio), ErrorCode::InvalidArgument,
                "duration / dt must be an integer");
        return static_cast<std::size_t>(n);
    }
};

struct Snapshot {
    double t = 0.0;
    ComplexField psi;
};

struct PropagationResult {
    ComplexField psi;
    double t_final = 0.0;
    double initial_norm = 0.0;
    double final_norm = 0.0;
    /// Largest relative norm deviation seen over the run.
    double max_norm_drift = 0.0;
    std::vector<Snapshot> snapshots;

    double norm_drift() const { return std::abs(final_norm - initial_norm) / initial_norm; }
};

/// Relative Dirichlet-consistency thresholds: at start and during the run.
inline constexpr double kInitialBoundaryRatio = 1e-8;
inline constexpr double kRunBoundaryRatio = 1e-4;

namespace detail {

inline double boundary_ratio(std::span<const complex> psi) {
    double peak = 0.0;
    for (const auto& v : psi) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak == 0.0) {
        return 0.0;
    }
    const std::size_t n = psi.size();
    const double edge = std::max({std::abs(psi[0]), std::abs(psi[1]), std::abs(psi[n - 2]),
                                  std::abs(psi[n - 1])});
    return edge / peak;
}

}  // namespace detail

/// Solves (I + i dt/(2 hbar) H) psi_{n+1} = (I - i dt/(2 hbar) H) psi_n with
/// H = -(hbar^2/2m) D2 + V(x, t_n + dt/2), psi = 0 at both ends.
inline PropagationResult crank_nicolson_1d(const ComplexField& psi0, const PotentialFn& potential,
                                           const PhysConsts& consts,
                                           const PropagatorConfig& config) {
    const GridSpec& grid = psi0.grid;
    require(grid.dim() == 1, ErrorCode::DimensionMismatch, "Crank-Nicolson runs on 1D grids");
    require(grid.size() >= 5, ErrorCode::GridTooSmall, "propagation grid needs >= 5 nodes");
    consts.validate();
    const std::size_t steps = config.steps();
    require(detail::boundary_ratio(psi0.values) < kInitialBoundaryRatio, ErrorCode::BoundaryLeak,
            "initial state is not negligible at the Dirichlet boundaries");

    const std::size_t n = grid.size();
    const double h = grid.axis(0).spacing();
    const double signed_dt = config.backward ? -config.dt : config.dt;
    const double kappa = consts.hbar * consts.hbar / (2.0 * consts.m * h * h);
    const complex ia{0.0, signed_dt / (2.0 * consts.hbar)};

    PropagationResult result;
    result.psi = psi0;
    result.psi.values.front() = 0.0;
    result.psi.values.back() = 0.0;
    result.initial_norm = l2_norm(psi0);
    require(result.initial_norm > 0.0, ErrorCode::InvalidArgument, "initial state is zero");

    std::vector<complex>& psi = result.psi.values;
    std::vector<double> V(n);
    std::vector<complex> rhs(n), cprime(n), dprime(n);
    const complex off = -ia * kappa;  // off-diagonal of I + iaH
    double t = config.t0;

    auto record = [&](std::size_t step) {
        if (config.snapshot_stride > 0 && step % config.snapshot_stride == 0) {
            result.snapshots.push_back({t, result.psi});
        }
    };
    record(0);

    for (std::size_t step = 0; step < steps; ++step) {
        const double t_mid = t + 0.5 * signed_dt;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.axis(0).coord(i);
            V[i] = potential(std::span<const double>(&x, 1), t_mid);
        }
        // rhs = (I - iaH) psi on interior nodes.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const complex Hpsi = kappa * (2.0 * psi[i] - psi[i - 1] - psi[i + 1]) + V[i] * psi[i];
            rhs[i] = psi[i] - ia * Hpsi;
        }
        // Thomas sweep for the interior unknowns 1..n-2.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const complex diag = 1.0 + ia * (2.0 * kappa + V[i]);
            if (i == 1) {
                cprime[i] = off / diag;
                dprime[i] = rhs[i] / diag;
            } else {
                const complex denom = diag - off * cprime[i - 1];
                cprime[i] = off / denom;
                dprime[i] = (rhs[i] - off * dprime[i - 1]) / denom;
            }
        }
        psi[n - 2] = dprime[n - 2];
        for (std::size_t i = n - 3; i >= 1; --i) {
            psi[i] = dprime[i] - cprime[i] * psi[i + 1];
        }
        t = config.t0 + static_cast<double>(step + 1) * signed_dt;

        const double ratio = detail::boundary_ratio(psi);
        if (ratio > kRunBoundaryRatio) {
            fail(ErrorCode::BoundaryLeak, "wavefunction reached the boundary at t = " +
                                              std::to_string(t) + " (ratio " +
                                              std::to_string(ratio) + ")");
        }
        const double norm = l2_norm(result.psi);
        result.max_norm_drift =
            std::max(result.max_norm_drift, std::abs(norm - result.initial_norm) / result.initial_norm);
        record(step + 1);
    }
    result.t_final = t;
    result.final_norm = l2_norm(result.psi);
    return result;
}

// ---------------------------------------------------------------------------
// Comparison against the exact superposition
// ---------------------------------------------------------------------------

struct Region {
    double xmin = -1.0;
    double xmax = 1.0;
};

struct CompareReport {
    double l2_rel = 0.0;
    double linf_rel = 0.0;
    double norm_drift = 0.0;
    Region region;
};

/// Relative L2 / Linf difference over `region` after multiplying `numeric` by
/// the unit phase that minimizes the L2 difference.
inline CompareReport compare_fields(const ComplexField& numeric, const ComplexField& exact,
                                    const Region& region) {
    require(numeric.grid == exact.grid, ErrorCode::InvalidArgument, "fields on different grids");
    require(numeric.grid.dim() == 1, ErrorCode::DimensionMismatch, "comparison is 1D");
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < numeric.values.size(); ++i) {
        const double x = numeric.grid.axis(0).coord(i);
        if (x >= region.xmin && x <= region.xmax) {
            nodes.push_back(i);
        }
    }
    require(!nodes.empty(), ErrorCode::EmptyInterior, "comparison region contains no nodes");
    complex overlap{};
    for (const auto i : nodes) {
        overlap += std::conj(numeric.values[i]) * exact.values[i];
    }
    const complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : complex{1.0, 0.0};
    double diff2 = 0.0, ref2 = 0.0, diff_max = 0.0, ref_max = 0.0;
    for (const auto i : nodes) {
        const double d = std::abs(phase * numeric.values[i] - exact.values[i]);
        const double r = std::abs(exact.values[i]);
        diff2 += d * d;
        ref2 += r * r;
        diff_max = std::max(diff_max, d);
        ref_max = std::max(ref_max, r);
    }
    require(ref2 > 0.0, ErrorCode::InvalidArgument, "reference vanishes on the region");
    CompareReport out;
    out.l2_rel = std::sqrt(diff2 / ref2);
    out.linf_rel = diff_max / ref_max;
    out.region = region;
    return out;
}

inline CompareReport compare_exact(const PropagationResult& numeric, const PacketSpec& spec,
                                   const PhysConsts& consts, double t, const Region& region) {
    const ComplexField exact = build_packet(spec, consts, numeric.psi.grid, t);
    CompareReport out = compare_fields(numeric.psi, exact, region);
    out.norm_drift = numeric.norm_drift();
    return out;
}

// ---------------------------------------------------------------------------
// Expansion in the psi_P basis
// ---------------------------------------------------------------------------

struct ExpansionResult {
    std::vector<double> P;
    std::vector<complex> coeffs;
    ComplexField reconstruction;
    double l2_rel_error = 0.0;
};

/// c(P_i) = (1/2 pi hbar) * trapezoid_x[conj(psi_{P_i}(x, t)) target(x)];
/// reconstruction = sum_i w_i c(P_i) psi_{P_i}(x, t).
inline ExpansionResult expand_and_reconstruct(const ComplexField& target,
                                              const HarmonicFamily& family_template,
                                              const PhysConsts& consts, double t,
                                              const Quadrature& quadrature) {
    const GridSpec& grid = target.grid;
    require(grid.dim() == 1, ErrorCode::DimensionMismatch, "expansion is 1D");
    check_aliasing(quadrature.step(), grid, consts.hbar);
    const auto nodes = quadrature.nodes();
    const std::size_t n = grid.size();
    const double h = grid.axis(0).spacing();

    ExpansionResult out;
    out.reconstruction = ComplexField(grid);
    std::vector<complex> basis(n);
    for (const auto& [P, w] : nodes) {
        const HarmonicFamily family = with_momentum(family_template, P);
        complex c{};
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.axis(0).coord(i);
            basis[i] = exact_wavefunction(family, consts, std::span<const double>(&x, 1), t);
            const double wx = (i == 0 || i + 1 == n) ? 0.5 * h : h;
            c += wx * std::conj(basis[i]) * target.values[i];
        }
        c /= 2.0 * std::numbers::pi * consts.hbar;
        for (std::size_t i = 0; i < n; ++i) {
            out.reconstruction.values[i] += w * c * basis[i];
        }
        out.P.push_back(P);
        out.coeffs.push_back(c);
    }
    ComplexField diff(grid);
    for (std::size_t i = 0; i < n; ++i) {
        diff.values[i] = out.reconstruction.values[i] - target.values[i];
    }
    const double ref = l2_norm(target);
    require(ref > 0.0, ErrorCode::InvalidArgument, "target is zero");
    out.l2_rel_error = l2_norm(diff) / ref;
    return out;
}

/// Normalized Gaussian exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / hbar), whose
/// |psi|^2 has standard deviation sigma.
inline ComplexField gaussian_state(const GridSpec& grid, double x0, double sigma, double p0,
                                   double hbar) {
    require(grid.dim() == 1, ErrorCode::DimensionMismatch, "gaussian_state is 1D");
    ComplexField out(grid);
    const double amp = std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.axis(0).coord(i);
        const double u = x - x0;
        out.values[i] = amp * std::exp(-u * u / (4.0 * sigma * sigma)) * std::polar(1.0, p0 * x / hbar);
    }
    return out;
}

}  // namespace hjlab
