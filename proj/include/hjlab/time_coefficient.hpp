#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "hjlab/error.hpp"

namespace hjlab {

using complex = std::complex<double>;

/// One term a * t^n * exp(rate * t).
struct TimeTerm {
    complex amplitude;
    int power = 0;
    double rate = 0.0;

    friend bool operator==(const TimeTerm&, const TimeTerm&) = default;
};

/// Finite sum of terms a * t^n * exp(lambda * t).
///
/// The set is closed under addition, multiplication, differentiation and
/// antidifferentiation, which is all the time dependence the harmonic
/// families need. The term list is kept canonical: sorted by (rate, power),
/// no two terms share (power, rate), and exactly-zero amplitudes are dropped.
class TimeCoefficient {
public:
    TimeCoefficient() = default;

    explicit TimeCoefficient(std::vector<TimeTerm> terms) : terms_(std::move(terms)) {
        for (const auto& term : terms_) {
            require(term.power >= 0, ErrorCode::InvalidArgument,
                    "time coefficient powers must be nonnegative");
            require(std::isfinite(term.rate) && std::isfinite(term.amplitude.real()) &&
                        std::isfinite(term.amplitude.imag()),
                    ErrorCode::NonFinite, "time coefficient term is not finite");
        }
        canonicalize();
    }

    static TimeCoefficient constant(complex value) { return TimeCoefficient({{value, 0, 0.0}}); }

    static TimeCoefficient monomial(complex amplitude, int power, double rate = 0.0) {
        return TimeCoefficient({{amplitude, power, rate}});
    }

    std::span<const TimeTerm> terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_real() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](const TimeTerm& term) { return term.amplitude.imag() == 0.0; });
    }

    complex operator()(double t) const {
        complex sum{0.0, 0.0};
        for (const auto& term : terms_) {
            double factor = std::pow(t, term.power);
            if (term.rate != 0.0) {
                factor *= std::exp(term.rate * t);
            }
            sum += term.amplitude * factor;
        }
        return sum;
    }

    double real_at(double t) const { return (*this)(t).real(); }

    TimeCoefficient derivative() const {
        std::vector<TimeTerm> out;
        out.reserve(2 * terms_.size());
        for (const auto& term : terms_) {
            if (term.rate != 0.0) {
                out.push_back({term.amplitude * term.rate, term.power, term.rate});
            }
            if (term.power > 0) {
                out.push_back({term.amplitude * static_cast<double>(term.power), term.power - 1,
                               term.rate});
            }
        }
        return TimeCoefficient(std::move(out));
    }

    /// An antiderivative with no free constant added: for rate 0 the term
    /// t^(n+1)/(n+1), otherwise exp(rate t) * sum_k (-1)^k n!/(n-k)! t^(n-k) / rate^(k+1).
    TimeCoefficient antiderivative() const {
        std::vector<TimeTerm> out;
        for (const auto& term : terms_) {
            if (term.rate == 0.0) {
                out.push_back({term.amplitude / static_cast<double>(term.power + 1), term.power + 1,
                               0.0});
                continue;
            }
            double falling = 1.0;  // n (n-1) ... (n-k+1)
            double inv_rate_pow = 1.0 / term.rate;
            for (int k = 0; k <= term.power; ++k) {
                const double sign = (k % 2 == 0) ? 1.0 : -1.0;
                out.push_back({term.amplitude * (sign * falling * inv_rate_pow), term.power - k,
                               term.rate});
                falling *= static_cast<double>(term.power - k);
                inv_rate_pow /= term.rate;
            }
        }
        return TimeCoefficient(std::move(out));
    }

    /// The antiderivative that vanishes at t = 0.
    TimeCoefficient integral_from_zero() const {
        TimeCoefficient anti = antiderivative();
        return anti - constant(anti(0.0));
    }

    TimeCoefficient conj() const {
        std::vector<TimeTerm> out(terms_.begin(), terms_.end());
        for (auto& term : out) {
            term.amplitude = std::conj(term.amplitude);
        }
        return TimeCoefficient(std::move(out));
    }

    friend TimeCoefficient operator+(const TimeCoefficient& a, const TimeCoefficient& b) {
        std::vector<TimeTerm> out(a.terms_.begin(), a.terms_.end());
        out.insert(out.end(), b.terms_.begin(), b.terms_.end());
        return TimeCoefficient(std::move(out));
    }

    friend TimeCoefficient operator*(complex scale, const TimeCoefficient& a) {
        std::vector<TimeTerm> out(a.terms_.begin(), a.terms_.end());
        for (auto& term : out) {
            term.amplitude *= scale;
        }
        return TimeCoefficient(std::move(out));
    }

    friend TimeCoefficient operator-(const TimeCoefficient& a, const TimeCoefficient& b) {
        return a + complex(-1.0, 0.0) * b;
    }

    friend TimeCoefficient operator*(const TimeCoefficient& a, const TimeCoefficient& b) {
        std::vector<TimeTerm> out;
        out.reserve(a.terms_.size() * b.terms_.size());
        for (const auto& x : a.terms_) {
            for (const auto& y : b.terms_) {
                out.push_back({x.amplitude * y.amplitude, x.power + y.power, x.rate + y.rate});
            }
        }
        return TimeCoefficient(std::move(out));
    }

    friend bool operator==(const TimeCoefficient&, const TimeCoefficient&) = default;

private:
    void canonicalize() {
        std::sort(terms_.begin(), terms_.end(), [](const TimeTerm& a, const TimeTerm& b) {
            return a.rate != b.rate ? a.rate < b.rate : a.power < b.power;
        });
        std::vector<TimeTerm> merged;
        merged.reserve(terms_.size());
        for (const auto& term : terms_) {
            if (!merged.empty() && merged.back().power == term.power &&
                merged.back().rate == term.rate) {
                merged.back().amplitude += term.amplitude;
            } else {
                merged.push_back(term);
            }
        }
        std::erase_if(merged, [](const TimeTerm& term) { return term.amplitude == complex{}; });
        terms_ = std::move(merged);
    }

    std::vector<TimeTerm> terms_;
};

}  // namespace hjlab
