#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hjlab/model.hpp"
#include "test_support.hpp"

using namespace hjlab;
using hjlab::testing::thrown_code;
using hjlab::testing::uniform;

namespace {

ActionEval at(const HarmonicFamily& f, std::vector<double> x, double t, PhysConsts k = {}) {
    return eval_action(f, k, x, t);
}

std::vector<HarmonicFamily> sample_families(std::mt19937_64& rng) {
    const double P = uniform(rng, -2.0, 2.0);
    const TimeCoefficient alpha({{uniform(rng, -1, 1), 0, 0.0}, {uniform(rng, -1, 1), 1, 0.0},
                                 {uniform(rng, -1, 1), 1, -0.5}});
    const std::vector<TimeCoefficient> coeffs = {
        TimeCoefficient::constant(uniform(rng, -1, 1)),
        TimeCoefficient({{complex(uniform(rng, -1, 1), uniform(rng, -1, 1)), 1, 0.0}}),
        TimeCoefficient({{complex(uniform(rng, -1, 1), uniform(rng, -1, 1)), 0, 0.3}}),
        TimeCoefficient::constant(complex(0.2, -0.1))};
    const RepulsiveOscillator2D osc{uniform(rng, 0.5, 1.5), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    return {Free1D{P},
            ConstantForce1D{uniform(rng, 0.5, 2.0), P},
            GrowingForce1D{uniform(rng, -2.0, -0.5), P},
            GeneralLinear1D{alpha, uniform(rng, -1, 1)},
            AnalyticPoly2D{coeffs},
            osc,
            LogCentral2D{uniform(rng, 0.5, 3.0)},
            Composite{{{osc, 0}, {ConstantForce1D{1.0, P}, 2}}}};
}

std::vector<double> sample_point(std::mt19937_64& rng, const HarmonicFamily& f) {
    std::vector<double> x(f.dim());
    for (auto& v : x) {
        v = f.get_if<LogCentral2D>() ? uniform(rng, 0.5, 1.5) : uniform(rng, -1.5, 1.5);
    }
    return x;
}

}  // namespace

TEST(EvalAction, ConstantForceExample) {
    const ActionEval e = at(ConstantForce1D{1.0, 0.0}, {1.0}, 1.0);
    EXPECT_NEAR(e.S, 5.0 / 6.0, 1e-15);
    EXPECT_DOUBLE_EQ(e.grad[0], 1.0);
    EXPECT_NEAR(e.dSdt, 0.5, 1e-15);
    EXPECT_EQ(e.lapS, 0.0);
}

TEST(EvalAction, FreeExample) {
    const ActionEval e = at(Free1D{2.0}, {0.0}, 0.0);
    EXPECT_EQ(e.S, 0.0);
    EXPECT_EQ(e.grad[0], 2.0);
    EXPECT_EQ(e.dSdt, -2.0);
}

TEST(EvalAction, LogCentralExample) {
    const ActionEval e = at(LogCentral2D{2.0}, {std::numbers::e, 0.0}, 5.0);
    EXPECT_NEAR(e.S, 2.0, 1e-15);
    EXPECT_NEAR(e.grad[0], 2.0 / std::numbers::e, 1e-15);
    EXPECT_EQ(e.grad[1], 0.0);
    EXPECT_EQ(e.dSdt, 0.0);
    EXPECT_EQ(e.lapS, 0.0);
}

TEST(EvalAction, GrowingForceExample) {
    const ActionEval e = at(GrowingForce1D{1.0, 0.0}, {1.0}, 1.0);
    EXPECT_NEAR(e.S, 0.475, 1e-15);
    EXPECT_NEAR(e.grad[0], 0.5, 1e-15);
    EXPECT_NEAR(e.dSdt, 1.0 - 0.125, 1e-15);
}

TEST(EvalAction, AnalyticSquareAtOnePlusI) {
    const ActionEval e = at(AnalyticPoly2D{{TimeCoefficient(), TimeCoefficient(),
                                            TimeCoefficient::constant(1.0)}},
                            {1.0, 1.0}, 0.0);
    EXPECT_NEAR(e.S, 0.0, 1e-15);
    EXPECT_NEAR(e.grad[0], 2.0, 1e-15);
    EXPECT_NEAR(e.grad[1], -2.0, 1e-15);
}

TEST(EvalAction, RespectsPhysicalConstants) {
    // m = 2: S = (Ft+P)x - (Ft+P)^3 / (6 m F)
    const ActionEval e = at(ConstantForce1D{2.0, 1.0}, {0.5}, 0.5, PhysConsts{1.0, 2.0, 1.0, 1.0});
    const double u = 2.0;
    EXPECT_NEAR(e.S, u * 0.5 - u * u * u / 24.0, 1e-15);
}

TEST(EvalAction, DimensionMismatchIsRejected) {
    EXPECT_EQ(thrown_code([] { at(Free1D{1.0}, {0.0, 1.0}, 0.0); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(thrown_code([] { at(LogCentral2D{1.0}, {1.0}, 0.0); }), ErrorCode::DimensionMismatch);
}

TEST(EvalAction, LogCentralIsSingularAtOrigin) {
    EXPECT_EQ(thrown_code([] { at(LogCentral2D{1.0}, {0.0, 0.0}, 0.0); }), ErrorCode::SingularPoint);
}

TEST(HarmonicFamily, ValidatesParameters) {
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = ConstantForce1D{0.0, 1.0}; }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = GrowingForce1D{0.0, 1.0}; }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = RepulsiveOscillator2D{0.0, 1.0, 1.0}; }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = LogCentral2D{-1.0}; }), ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = Free1D{NAN}; }), ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily f = AnalyticPoly2D{}; }), ErrorCode::InvalidArgument);
}

TEST(HarmonicFamily, CompositeSlicesMustTileWithinThreeDimensions) {
    const HarmonicFamily osc = RepulsiveOscillator2D{1.0, 0.0, 0.0};
    const HarmonicFamily line = Free1D{1.0};
    EXPECT_NO_THROW(HarmonicFamily(Composite{{{osc, 0}, {line, 2}}}));
    EXPECT_NO_THROW(HarmonicFamily(Composite{{{line, 0}, {osc, 1}}}));
    EXPECT_EQ(thrown_code([&] { HarmonicFamily(Composite{{{osc, 0}, {line, 1}}}); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([&] { HarmonicFamily(Composite{{{osc, 0}, {osc, 2}}}); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([&] { HarmonicFamily(Composite{{{line, 1}}}); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(thrown_code([] { HarmonicFamily(Composite{}); }), ErrorCode::InvalidArgument);
}

TEST(HarmonicFamily, TagsDimsAndIds) {
    const HarmonicFamily c = Composite{{{RepulsiveOscillator2D{1.0, 0.0, 0.0}, 0},
                                        {ConstantForce1D{1.0, 0.0}, 2}}};
    EXPECT_EQ(c.dim(), 3u);
    EXPECT_EQ(c.tag(), "Composite");
    EXPECT_EQ(HarmonicFamily(ConstantForce1D{1.0, 0.5}).id(), "ConstantForce1D{F=1,P=0.5}");
    EXPECT_EQ(HarmonicFamily(LogCentral2D{2.0}).dim(), 2u);
}

TEST(LinearBeta, MatchesClosedForms) {
    const double m = 1.7;
    const double F = 0.8;
    const double P = 0.3;
    // alpha = F t + P gives beta = -(F t + P)^3 / (6 m F) up to a constant.
    const TimeCoefficient alpha({{F, 1, 0.0}, {P, 0, 0.0}});
    const TimeCoefficient beta = linear1d_beta(alpha, m, -P * P * P / (6.0 * m * F));
    for (double t : {0.0, 0.5, 2.0}) {
        const double u = F * t + P;
        EXPECT_NEAR(beta.real_at(t), -u * u * u / (6.0 * m * F), 1e-13);
    }
    // alpha = k t^2/2 + P, m = 1.
    const double k = 1.3;
    const TimeCoefficient growing({{k / 2.0, 2, 0.0}, {P, 0, 0.0}});
    const TimeCoefficient gb = linear1d_beta(growing, 1.0, 0.0);
    for (double t : {0.0, 0.7, 1.5}) {
        const double expected = -(k * k * std::pow(t, 5) / 20.0 + k * P * t * t * t / 3.0 + P * P * t) / 2.0;
        EXPECT_NEAR(gb.real_at(t), expected, 1e-13);
    }
    EXPECT_EQ(linear1d_beta(TimeCoefficient(), 1.0, 4.0), TimeCoefficient::constant(4.0));
}

TEST(GeneralLinear, ReproducesConstantForceFamily) {
    const PhysConsts k{1.0, 1.3, 1.0, 1.0};
    const double F = -0.7;
    const double P = 0.4;
    const HarmonicFamily general =
        GeneralLinear1D{TimeCoefficient({{F, 1, 0.0}, {P, 0, 0.0}}), -P * P * P / (6.0 * k.m * F)};
    const Action a = make_action(general, k);
    for (double t : {0.0, 0.7, 2.0}) {
        for (double x : {-1.0, 0.3}) {
            const std::vector<double> pt{x};
            const ActionEval g = a.eval(pt, t);
            const ActionEval c = eval_action(ConstantForce1D{F, P}, k, pt, t);
            EXPECT_NEAR(g.S, c.S, 1e-13);
            EXPECT_NEAR(g.grad[0], c.grad[0], 1e-13);
            EXPECT_NEAR(g.dSdt, c.dSdt, 1e-13);
        }
    }
}

TEST(AnalyticPoly, ReproducesRepulsiveOscillator) {
    const PhysConsts k{1.0, 1.4, 1.0, 1.0};
    const double w = 0.9;
    const double P1 = 0.6;
    const double P2 = -1.1;
    const double mw = k.m * w;
    const HarmonicFamily poly = AnalyticPoly2D{{
        TimeCoefficient({{P1 * P1 / (4 * mw), 0, -2 * w}, {-P2 * P2 / (4 * mw), 0, 2 * w}}),
        TimeCoefficient({{P1, 0, -w}, {complex(0.0, -P2), 0, w}}),
        TimeCoefficient::constant(mw / 2.0),
    }};
    const HarmonicFamily osc = RepulsiveOscillator2D{w, P1, P2};
    for (double t : {0.0, 0.7, 2.0}) {
        const std::vector<double> x{0.4, -0.8};
        const ActionEval a = eval_action(poly, k, x, t);
        const ActionEval b = eval_action(osc, k, x, t);
        const double s = 1.0 + std::abs(b.S);
        EXPECT_NEAR(a.S, b.S, 1e-13 * s);
        EXPECT_NEAR(a.grad[0], b.grad[0], 1e-13 * s);
        EXPECT_NEAR(a.grad[1], b.grad[1], 1e-13 * s);
        EXPECT_NEAR(a.dSdt, b.dSdt, 1e-12 * s);
    }
}

TEST(Composite, SumsBlocksOnTheirSlices) {
    const PhysConsts k{};
    const HarmonicFamily osc = RepulsiveOscillator2D{1.0, 0.5, 0.5};
    const HarmonicFamily force = ConstantForce1D{1.0, 0.2};
    const HarmonicFamily c = Composite{{{force, 0}, {osc, 1}}};
    const std::vector<double> x{0.3, -0.4, 0.9};
    const ActionEval e = eval_action(c, k, x, 0.7);
    const ActionEval f = eval_action(force, k, std::vector<double>{0.3}, 0.7);
    const ActionEval o = eval_action(osc, k, std::vector<double>{-0.4, 0.9}, 0.7);
    EXPECT_EQ(e.dim, 3u);
    EXPECT_DOUBLE_EQ(e.S, f.S + o.S);
    EXPECT_DOUBLE_EQ(e.dSdt, f.dSdt + o.dSdt);
    EXPECT_EQ(e.grad[0], f.grad[0]);
    EXPECT_EQ(e.grad[1], o.grad[0]);
    EXPECT_EQ(e.grad[2], o.grad[1]);
}

TEST(Families, DerivativesMatchCentralDifferencesAndAreHarmonic) {
    std::mt19937_64 rng(20261016);
    const PhysConsts k{0.8, 1.3, 1.0, 1.0};
    const double h = 1e-4;
    for (int draw = 0; draw < 5; ++draw) {
        for (const auto& fam : sample_families(rng)) {
            const Action a = make_action(fam, k);
            for (double t : {0.0, 0.7, 2.0}) {
                const std::vector<double> x = sample_point(rng, fam);
                const ActionEval e = a.eval(x, t);
                const double scale = 1.0 + std::abs(e.S);
                EXPECT_NEAR((a.eval(x, t + h).S - a.eval(x, t - h).S) / (2 * h), e.dSdt, 1e-6 * scale)
                    << fam.id();
                double lap = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    auto xp = x;
                    auto xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    const double sp = a.eval(xp, t).S;
                    const double sm = a.eval(xm, t).S;
                    EXPECT_NEAR((sp - sm) / (2 * h), e.grad[i], 1e-6 * scale) << fam.id();
                    xp[i] += h;
                    xm[i] -= h;
                    const double sp2 = a.eval(xp, t).S;
                    const double sm2 = a.eval(xm, t).S;
                    // Fourth-order Laplacian with step h keeps cancellation small.
                    lap += (-sp2 + 16 * sp - 30 * e.S + 16 * sm - sm2) / (12 * h * h);
                }
                EXPECT_NEAR(lap, 0.0, 1e-4 * scale) << fam.id();
                EXPECT_EQ(e.lapS, 0.0);
            }
        }
    }
}

TEST(MonomialAction, ValuesAndLaplacian) {
    const Action cube = monomial_action(3, 2.0);
    const ActionEval e = cube.eval(std::vector<double>{1.5}, 0.0);
    EXPECT_DOUBLE_EQ(e.S, 2.0 * 3.375);
    EXPECT_DOUBLE_EQ(e.grad[0], 2.0 * 3.0 * 2.25);
    EXPECT_DOUBLE_EQ(e.lapS, 2.0 * 6.0 * 1.5);
    EXPECT_EQ(e.dSdt, 0.0);
    EXPECT_EQ(monomial_action(2).eval(std::vector<double>{0.0}, 1.0).lapS, 2.0);
}

TEST(WithMomentum, ReplacesP) {
    EXPECT_EQ(with_momentum(ConstantForce1D{2.0, 0.0}, 1.5).get_if<ConstantForce1D>()->P, 1.5);
    EXPECT_EQ(with_momentum(GrowingForce1D{2.0, 0.0}, -1.0).get_if<GrowingForce1D>()->k, 2.0);
    EXPECT_EQ(with_momentum(Free1D{0.0}, 3.0).get_if<Free1D>()->P, 3.0);
    EXPECT_EQ(thrown_code([] { with_momentum(LogCentral2D{1.0}, 1.0); }), ErrorCode::InvalidArgument);
}
