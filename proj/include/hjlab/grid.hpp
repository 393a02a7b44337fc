#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "hjlab/error.hpp"
#include "hjlab/model.hpp"

namespace hjlab {

struct Axis {
    double min = 0.0;
    double max = 1.0;
    std::size_t n = 2;

    double spacing() const { return (max - min) / static_cast<double>(n - 1); }
    double coord(std::size_t i) const { return min + static_cast<double>(i) * spacing(); }

    friend bool operator==(const Axis&, const Axis&) = default;
};

/// Uniform node-centered rectilinear grid in 1..3 dimensions; row-major with
/// the last axis fastest.
class GridSpec {
public:
    GridSpec() : GridSpec(std::vector<Axis>{Axis{}}) {}

    explicit GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
        require(!axes_.empty() && axes_.size() <= kMaxDim, ErrorCode::InvalidArgument,
                "grid dimension must be 1..3");
        for (const auto& axis : axes_) {
            require(std::isfinite(axis.min) && std::isfinite(axis.max) && axis.max > axis.min,
                    ErrorCode::InvalidArgument, "grid axis needs finite max > min");
            require(axis.n >= 2, ErrorCode::InvalidArgument, "grid axis needs at least 2 nodes");
        }
    }

    static GridSpec uniform(std::size_t dim, double min, double max, std::size_t n) {
        return GridSpec(std::vector<Axis>(dim, Axis{min, max, n}));
    }

    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t i) const { return axes_[i]; }
    std::span<const Axis> axes() const { return axes_; }

    std::size_t size() const {
        std::size_t total = 1;
        for (const auto& axis : axes_) {
            total *= axis.n;
        }
        return total;
    }

    /// Stride of axis `a` in the flat index.
    std::size_t stride(std::size_t a) const {
        std::size_t s = 1;
        for (std::size_t b = a + 1; b < axes_.size(); ++b) {
            s *= axes_[b].n;
        }
        return s;
    }

    double cell_volume() const {
        double v = 1.0;
        for (const auto& axis : axes_) {
            v *= axis.spacing();
        }
        return v;
    }

    double max_spacing() const {
        double h = 0.0;
        for (const auto& axis : axes_) {
            h = std::max(h, axis.spacing());
        }
        return h;
    }

    std::array<std::size_t, kMaxDim> unravel(std::size_t flat) const {
        std::array<std::size_t, kMaxDim> idx{};
        for (std::size_t a = axes_.size(); a-- > 0;) {
            idx[a] = flat % axes_[a].n;
            flat /= axes_[a].n;
        }
        return idx;
    }

    std::size_t ravel(const std::array<std::size_t, kMaxDim>& idx) const {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            flat = flat * axes_[a].n + idx[a];
        }
        return flat;
    }

    std::array<double, kMaxDim> point(std::size_t flat) const {
        const auto idx = unravel(flat);
        std::array<double, kMaxDim> x{};
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            x[a] = axes_[a].coord(idx[a]);
        }
        return x;
    }

    std::string summary() const {
        std::ostringstream os;
        os.precision(10);
        os << "n=";
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            os << (a ? "x" : "") << axes_[a].n;
        }
        os << ' ';
        for (std::size_t a = 0; a < axes_.size(); ++a) {
            os << (a ? "x" : "") << '[' << axes_[a].min << ',' << axes_[a].max << ']';
        }
        return os.str();
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    std::vector<Axis> axes_;
};

/// Number of nodes excluded per axis per side when forming residual norms.
struct InteriorMask {
    std::size_t margin = 1;

    bool contains(const GridSpec& grid, std::size_t flat) const {
        const auto idx = grid.unravel(flat);
        for (std::size_t a = 0; a < grid.dim(); ++a) {
            if (idx[a] < margin || idx[a] + margin >= grid.axis(a).n) {
                return false;
            }
        }
        return true;
    }
};

template <typename T>
struct Field {
    GridSpec grid;
    std::vector<T> values;

    Field() = default;
    Field(GridSpec g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {
        require(values.size() == grid.size(), ErrorCode::InvalidArgument,
                "field length does not match grid");
    }
    explicit Field(GridSpec g) : grid(std::move(g)), values(grid.size(), T{}) {}
};

using ScalarField = Field<double>;
using ComplexField = Field<complex>;

namespace detail {

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const complex& v) { return std::abs(v); }

inline std::size_t half_width(int order) {
    require(order == 2 || order == 4, ErrorCode::InvalidArgument, "stencil order must be 2 or 4");
    return static_cast<std::size_t>(order / 2);
}

inline void check_stencil_fits(const GridSpec& grid, int order) {
    const std::size_t need = 2 * half_width(order) + 1;
    for (std::size_t a = 0; a < grid.dim(); ++a) {
        require(grid.axis(a).n >= need, ErrorCode::GridTooSmall,
                "order-" + std::to_string(order) + " stencil needs at least " +
                    std::to_string(need) + " nodes per axis");
    }
}

}  // namespace detail

/// Samples `evaluator(x, t)` at every node. The evaluator may throw
/// (e.g. SingularPoint); non-finite values raise NonFinite.
template <typename F>
auto sample(F&& evaluator, const GridSpec& grid, double t)
    -> Field<std::decay_t<decltype(evaluator(std::span<const double>{}, t))>> {
    using T = std::decay_t<decltype(evaluator(std::span<const double>{}, t))>;
    Field<T> out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        const T v = evaluator(std::span<const double>(x.data(), grid.dim()), t);
        if (!detail::is_finite(v)) {
            std::ostringstream os;
            os << "evaluator returned a non-finite value at node " << i;
            fail(ErrorCode::NonFinite, os.str());
        }
        out.values[i] = v;
    }
    return out;
}

/// Second-derivative stencil taps for half-width 1 or 2, without the 1/h^2.
inline std::span<const double> laplacian_taps(int order) {
    static constexpr std::array<double, 3> k2 = {1.0, -2.0, 1.0};
    static constexpr std::array<double, 5> k4 = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0,
                                                 16.0 / 12.0, -1.0 / 12.0};
    return order == 2 ? std::span<const double>(k2) : std::span<const double>(k4);
}

/// First-derivative stencil taps, without the 1/h.
inline std::span<const double> gradient_taps(int order) {
    static constexpr std::array<double, 3> k2 = {-0.5, 0.0, 0.5};
    static constexpr std::array<double, 5> k4 = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0,
                                                 -1.0 / 12.0};
    return order == 2 ? std::span<const double>(k2) : std::span<const double>(k4);
}

namespace detail {

template <typename T>
Field<T> apply_axis_stencil(const Field<T>& field, std::size_t axis, std::span<const double> taps,
                            double scale) {
    const GridSpec& grid = field.grid;
    const std::size_t hw = taps.size() / 2;
    const InteriorMask mask{hw};
    const std::size_t stride = grid.stride(axis);
    Field<T> out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!mask.contains(grid, i)) {
            continue;
        }
        T acc{};
        for (std::size_t k = 0; k < taps.size(); ++k) {
            if (taps[k] == 0.0) {
                continue;
            }
            const std::size_t j = i + k * stride - hw * stride;
            acc += taps[k] * field.values[j];
        }
        out.values[i] = acc * scale;
    }
    return out;
}

}  // namespace detail

/// Centered first derivatives along every axis. Nodes within order/2 of a
/// boundary are set to 0.
template <typename T>
std::vector<Field<T>> fd_gradient(const Field<T>& field, int order) {
    detail::check_stencil_fits(field.grid, order);
    std::vector<Field<T>> out;
    for (std::size_t a = 0; a < field.grid.dim(); ++a) {
        out.push_back(detail::apply_axis_stencil(field, a, gradient_taps(order),
                                                 1.0 / field.grid.axis(a).spacing()));
    }
    return out;
}

/// Single-axis centered derivative.
template <typename T>
Field<T> fd_derivative(const Field<T>& field, std::size_t axis, int order) {
    detail::check_stencil_fits(field.grid, order);
    require(axis < field.grid.dim(), ErrorCode::DimensionMismatch, "axis out of range");
    return detail::apply_axis_stencil(field, axis, gradient_taps(order),
                                      1.0 / field.grid.axis(axis).spacing());
}

/// Centered Laplacian: per-axis [1,-2,1]/h^2 (order 2) or
/// [-1,16,-30,16,-1]/(12 h^2) (order 4), summed over axes.
template <typename T>
Field<T> fd_laplacian(const Field<T>& field, int order) {
    detail::check_stencil_fits(field.grid, order);
    Field<T> out(field.grid);
    for (std::size_t a = 0; a < field.grid.dim(); ++a) {
        const double h = field.grid.axis(a).spacing();
        const auto part = detail::apply_axis_stencil(field, a, laplacian_taps(order), 1.0 / (h * h));
        for (std::size_t i = 0; i < out.values.size(); ++i) {
            out.values[i] += part.values[i];
        }
    }
    return out;
}

struct Norms {
    double l2 = 0.0;
    double linf = 0.0;
};

/// Discrete L2 (sum |v|^2 times cell volume, square-rooted) and max norm over
/// the unmasked nodes.
template <typename T>
Norms norms(const Field<T>& field, const InteriorMask& mask) {
    Norms out;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (!mask.contains(field.grid, i)) {
            continue;
        }
        const double v = detail::magnitude(field.values[i]);
        require(std::isfinite(v), ErrorCode::NonFinite, "non-finite value in norm");
        sum += v * v;
        out.linf = std::max(out.linf, v);
        ++count;
    }
    require(count > 0, ErrorCode::EmptyInterior, "mask excludes every node");
    out.l2 = std::sqrt(sum * field.grid.cell_volume());
    return out;
}

// ---------------------------------------------------------------------------
// CSV dumps
// ---------------------------------------------------------------------------

/// Shortest-round-trip-safe decimal rendering used by every text output.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv_header(std::ostream& os, std::size_t dim, bool complex_values,
                             const char* value_column = "v") {
    static constexpr std::array<const char*, 3> kAxis = {"x", "y", "z"};
    for (std::size_t a = 0; a < dim; ++a) {
        os << kAxis[a] << ',';
    }
    os << 't' << ',';
    if (complex_values) {
        os << "re,im\n";
    } else {
        os << value_column << '\n';
    }
}

/// Rows in grid order (last axis fastest): coordinates, t, value(s).
template <typename T>
void write_csv_rows(std::ostream& os, const Field<T>& field, double t) {
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        const auto x = field.grid.point(i);
        for (std::size_t a = 0; a < field.grid.dim(); ++a) {
            os << format_double(x[a]) << ',';
        }
        os << format_double(t) << ',';
        if constexpr (std::is_same_v<T, complex>) {
            os << format_double(field.values[i].real()) << ','
               << format_double(field.values[i].imag()) << '\n';
        } else {
            os << format_double(field.values[i]) << '\n';
        }
    }
}

template <typename T>
void write_csv(std::ostream& os, const Field<T>& field, double t, const char* value_column = "v") {
    write_csv_header(os, field.grid.dim(), std::is_same_v<T, complex>, value_column);
    write_csv_rows(os, field, t);
}

}  // namespace hjlab
