#include <gtest/gtest.h>

#include <cmath>

#include "hjlab/verify.hpp"
#include "test_support.hpp"

using namespace hjlab;
using hjlab::testing::thrown_code;

namespace {

const PhysConsts kUnit{};

std::vector<GridSpec> line_grids(double lo, double hi, std::size_t base, std::size_t levels = 3) {
    return refinement_grids({Axis{lo, hi, 2}}, base, levels);
}

std::vector<GridSpec> square_grids(double lo, double hi, std::size_t base) {
    return refinement_grids({Axis{lo, hi, 2}, Axis{lo, hi, 2}}, base, 3);
}

RefinementStudy schrodinger_study(const HarmonicFamily& f, const PotentialSpec& V,
                                  const std::vector<GridSpec>& grids, double t, int order = 2,
                                  const GaugeField& gauge = ZeroGauge{}) {
    return refinement_study(
        [&](const GridSpec& g) { return schrodinger_residual(f, V, gauge, kUnit, g, t, order); },
        std::span<const GridSpec>(grids));
}

PotentialSpec matching(const HarmonicFamily& f) { return PotentialSpec{*matching_catalog(f)}; }

}  // namespace

TEST(Report, RelAndPassRules) {
    ResidualReport r;
    EXPECT_EQ(r.rel(), 0.0);
    r.linf = 1e-3;
    EXPECT_TRUE(std::isinf(r.rel()));
    r.scale = 10.0;
    EXPECT_DOUBLE_EQ(r.rel(), 1e-4);
    EXPECT_FALSE(r.pass());
    r.nominal_order = 2;
    r.order_status = OrderStatus::Estimated;
    r.order_estimate = 2.19;
    EXPECT_TRUE(r.pass());
    r.order_estimate = 2.21;
    EXPECT_FALSE(r.pass());
    r.order_estimate = 1.79;
    EXPECT_FALSE(r.pass());
}

TEST(Laplace, LinearActionIsExact) {
    const ResidualReport r = laplace_residual(ConstantForce1D{1.0, 0.3}, kUnit,
                                              GridSpec({Axis{-2, 2, 33}}), 0.7, 2);
    EXPECT_LE(r.rel(), kExactnessTolerance);
    EXPECT_TRUE(r.pass());
}

TEST(Laplace, QuadraticActionIsExactToRoundOff) {
    for (int order : {2, 4}) {
        const ResidualReport r = laplace_residual(RepulsiveOscillator2D{1.3, 0.4, -0.2}, kUnit,
                                                  GridSpec::uniform(2, -1, 1, 33), 0.5, order);
        EXPECT_LE(r.rel(), kExactnessTolerance);
        EXPECT_TRUE(r.pass());
    }
}

TEST(Laplace, LogCentralConvergesAtSecondOrder) {
    const auto lo = laplace_residual(LogCentral2D{2.0}, kUnit, GridSpec::uniform(2, 1, 3, 65), 0, 2);
    const auto hi = laplace_residual(LogCentral2D{2.0}, kUnit, GridSpec::uniform(2, 1, 3, 129), 0, 2);
    const double ratio = lo.l2 / hi.l2;
    EXPECT_GE(ratio, 3.4);
    EXPECT_LE(ratio, 4.6);
    EXPECT_GT(lo.rel(), kExactnessTolerance);
}

TEST(Laplace, NonHarmonicActionIsDetected) {
    const ResidualReport r = laplace_residual(monomial_action(2), GridSpec({Axis{-1, 1, 17}}), 0, 2);
    EXPECT_NEAR(r.linf, 2.0, 1e-12);
    EXPECT_FALSE(r.pass());
}

TEST(HamiltonJacobi, SynthesizedPotentialClosesForEveryFamily) {
    const std::vector<std::pair<HarmonicFamily, GridSpec>> cases = {
        {Free1D{1.5}, GridSpec({Axis{-2, 2, 65}})},
        {ConstantForce1D{-0.8, 0.4}, GridSpec({Axis{-2, 2, 65}})},
        {GrowingForce1D{0.5, 1.0}, GridSpec({Axis{-2, 2, 65}})},
        {GeneralLinear1D{TimeCoefficient({{1.0, 2, -0.3}, {0.5, 0, 0.0}}), 0.2},
         GridSpec({Axis{-2, 2, 65}})},
        {AnalyticPoly2D{{TimeCoefficient::constant(0.1), TimeCoefficient::monomial(complex(0.3, 0.2), 1),
                         TimeCoefficient::monomial(0.5, 0, -0.4)}},
         GridSpec::uniform(2, -1, 1, 17)},
        {RepulsiveOscillator2D{1.1, 0.5, -0.5}, GridSpec::uniform(2, -1, 1, 17)},
        {LogCentral2D{2.0}, GridSpec::uniform(2, 1, 3, 17)},
        {Composite{{{RepulsiveOscillator2D{1.0, 1.0, 1.0}, 0}, {ConstantForce1D{1.0, 0.0}, 2}}},
         GridSpec::uniform(3, -1, 1, 9)},
    };
    for (const auto& [family, grid] : cases) {
        for (double t : {0.0, 0.7, 2.0}) {
            const ResidualReport r =
                hj_residual(family, PotentialSpec{Synthesized{family}}, ZeroGauge{}, kUnit, grid, t);
            EXPECT_LE(r.rel(), 1e-12) << family.id();
            EXPECT_TRUE(r.pass());
            EXPECT_GT(r.scale, 0.0);
        }
    }
}

TEST(HamiltonJacobi, MatchingCatalogCloses) {
    const HarmonicFamily f = ConstantForce1D{1.0, 0.0};
    const ResidualReport r = hj_residual(f, matching(f), ZeroGauge{}, kUnit,
                                         GridSpec({Axis{-3, 3, 61}}), 1.2);
    EXPECT_LE(r.rel(), 1e-12);
}

TEST(HamiltonJacobi, WrongForceIsDetected) {
    // V_wrong - V_true = -2x + x, so the residual at x = 1 is -1.
    const GridSpec g({Axis{-1, 1, 3}});
    const auto field = hj_residual_field(make_action(ConstantForce1D{1.0, 0.0}, kUnit),
                                         make_potential(PotentialSpec{CatalogPotential(UniformForce{2.0})}, kUnit),
                                         ZeroGauge{}, kUnit, g, 0.0);
    EXPECT_NEAR(field.residual.values[2], -1.0, 1e-15);
    const ResidualReport r = hj_residual(ConstantForce1D{1.0, 0.0},
                                         PotentialSpec{CatalogPotential(UniformForce{2.0})},
                                         ZeroGauge{}, kUnit, g, 0.0);
    EXPECT_FALSE(r.pass());
}

TEST(HamiltonJacobi, UniformMagneticFieldCloses) {
    const PhysConsts k{1.0, 1.0, 0.7, 2.0};
    const HarmonicFamily f = LogCentral2D{2.0};
    const GaugeField B = UniformB{0.9};
    const ResidualReport closed =
        hj_residual(f, PotentialSpec{Synthesized{f, B}}, B, k, GridSpec::uniform(2, 1, 3, 17), 0.0);
    EXPECT_LE(closed.rel(), 1e-12);
    const ResidualReport field_free =
        hj_residual(f, PotentialSpec{Synthesized{f}}, B, k, GridSpec::uniform(2, 1, 3, 17), 0.0);
    EXPECT_FALSE(field_free.pass());
}

TEST(Schrodinger, FreeZeroMomentumIsExact) {
    const HarmonicFamily f = Free1D{0.0};
    const ResidualReport r =
        schrodinger_residual(f, matching(f), ZeroGauge{}, kUnit, GridSpec({Axis{-1, 1, 17}}), 0.3, 2);
    EXPECT_EQ(r.linf, 0.0);
}

TEST(Schrodinger, ConstantForceConvergesAtStencilOrder) {
    const HarmonicFamily f = ConstantForce1D{1.0, 0.5};
    const RefinementStudy s2 = schrodinger_study(f, matching(f), line_grids(-2, 2, 32), 0.7, 2);
    ASSERT_TRUE(s2.mean_order.has_value());
    EXPECT_NEAR(*s2.mean_order, 2.0, 0.2);
    EXPECT_TRUE(s2.pass());
    const RefinementStudy s4 = schrodinger_study(f, matching(f), line_grids(-2, 2, 32), 0.7, 4);
    EXPECT_NEAR(*s4.mean_order, 4.0, 0.4);
    EXPECT_TRUE(s4.pass());
}

TEST(Schrodinger, RepulsiveOscillatorConverges) {
    const HarmonicFamily f = RepulsiveOscillator2D{1.0, 1.0, 1.0};
    const RefinementStudy s = schrodinger_study(f, matching(f), square_grids(-1, 1, 32), 0.3);
    EXPECT_TRUE(s.pass());
    for (const auto& level : s.levels) {
        EXPECT_EQ(level.order_status, OrderStatus::Estimated);
    }
}

TEST(Schrodinger, MagneticGaugeConverges) {
    const HarmonicFamily f = LogCentral2D{2.0};
    const GaugeField B = UniformB{0.5};
    const RefinementStudy s =
        schrodinger_study(f, PotentialSpec{Synthesized{f, B}}, square_grids(1, 3, 32), 0.0, 2, B);
    EXPECT_TRUE(s.pass());
    // Dropping the vector-potential terms from V breaks exactness at O(1).
    const RefinementStudy wrong =
        schrodinger_study(f, PotentialSpec{Synthesized{f}}, square_grids(1, 3, 32), 0.0, 2, B);
    EXPECT_FALSE(wrong.pass());
}

TEST(Schrodinger, SingleNodeCorruptionIsDetected) {
    // Local momentum F t + P = 0.5 keeps truncation well below the 1e-3 bump.
    const HarmonicFamily f = ConstantForce1D{1.0, -0.2};
    const PotentialFn V = make_potential(matching(f), kUnit);
    const PotentialFn corrupted = [&](std::span<const double> x, double t) {
        const double v = V(x, t);
        return x[0] == 1.0 ? v * (1.0 + 1e-3) : v;
    };
    const auto grids = line_grids(-2, 2, 64);
    const Action a = make_action(f, kUnit);
    auto study = [&](const PotentialFn& pot) {
        return refinement_study(
            [&](const GridSpec& g) {
                return schrodinger_residual(a, pot, "V", ZeroGauge{}, kUnit, g, 0.7, 2);
            },
            std::span<const GridSpec>(grids));
    };
    EXPECT_TRUE(study(V).pass());
    EXPECT_FALSE(study(corrupted).levels.back().pass());
    const PotentialFn mismatched =
        make_potential(PotentialSpec{CatalogPotential(UniformForce{1.0 + 1e-3})}, kUnit);
    EXPECT_FALSE(study(mismatched).levels.back().pass());
}

TEST(Schrodinger, UnderResolvedGridWarns) {
    const HarmonicFamily f = Free1D{40.0};
    const ResidualReport r =
        schrodinger_residual(f, matching(f), ZeroGauge{}, kUnit, GridSpec({Axis{-1, 1, 17}}), 0.0, 2);
    EXPECT_FALSE(r.warning.empty());
}

TEST(Equivalence, QuadraticActionAtOrigin) {
    // S = x^2: continuum Schrodinger residual at (0, 0) is -(i/2)(2)(1) = -i.
    const GridSpec g({Axis{-1, 1, 257}});
    const Action a = monomial_action(2);
    const auto field =
        schrodinger_residual_field(a, synthesized_potential(a, ZeroGauge{}, kUnit), ZeroGauge{}, kUnit, g, 0.0, 2);
    const complex mid = field.residual.values[128];
    EXPECT_NEAR(mid.real(), 0.0, 1e-3);
    EXPECT_NEAR(mid.imag(), -1.0, 1e-3);
}

TEST(Equivalence, NonHarmonicActionsSatisfyIdentity) {
    for (int power : {2, 3}) {
        const Action a = monomial_action(power);
        const auto grids = line_grids(-1, 1, 64);
        std::vector<EquivalenceResult> sides;
        const RefinementStudy s = refinement_study(
            [&](const GridSpec& g) {
                sides.push_back(equivalence_identity_check(a, ZeroGauge{}, kUnit, g, 0.0, 2));
                return sides.back().difference;
            },
            std::span<const GridSpec>(grids));
        EXPECT_TRUE(s.pass()) << power;
        for (const auto& side : sides) {
            EXPECT_GE(side.schrodinger_linf, 0.1 * side.difference.scale) << power;
            EXPECT_GE(side.reference_linf, 0.1 * side.difference.scale) << power;
        }
    }
}

TEST(Equivalence, HarmonicActionReducesToSchrodinger) {
    const Action a = make_action(RepulsiveOscillator2D{1.0, 0.2, 0.1}, kUnit);
    const EquivalenceResult r =
        equivalence_identity_check(a, ZeroGauge{}, kUnit, GridSpec::uniform(2, -1, 1, 33), 0.2, 2);
    EXPECT_EQ(r.reference_linf, 0.0);
    EXPECT_DOUBLE_EQ(r.difference.linf, r.schrodinger_linf);
}

TEST(Operators, PredefinedSetsAndLabels) {
    EXPECT_EQ(predefined_operators(ConstantForce1D{1.0, 0.0}, kUnit).at(0).label, "p - F t");
    EXPECT_EQ(predefined_operators(GrowingForce1D{1.0, 0.0}, kUnit).at(0).label, "p - k t^2/2");
    EXPECT_EQ(predefined_operators(RepulsiveOscillator2D{1.0, 0.0, 0.0}, kUnit).size(), 2u);
    EXPECT_TRUE(predefined_operators(LogCentral2D{1.0}, kUnit).empty());
    const auto composite = predefined_operators(
        Composite{{{RepulsiveOscillator2D{1.0, 1.0, 1.0}, 0}, {ConstantForce1D{1.0, 0.0}, 2}}}, kUnit);
    ASSERT_EQ(composite.size(), 3u);
    EXPECT_EQ(composite[2].axis, 2u);
}

TEST(Operators, AnalyticEigenvaluesAreExact) {
    std::mt19937_64 rng(99);
    const PhysConsts k{0.7, 1.6, 1.0, 1.0};
    for (int draw = 0; draw < 5; ++draw) {
        const double P = hjlab::testing::uniform(rng, -2, 2);
        const std::vector<std::pair<HarmonicFamily, GridSpec>> cases = {
            {ConstantForce1D{hjlab::testing::uniform(rng, 0.5, 2), P}, GridSpec({Axis{-2, 2, 41}})},
            {GrowingForce1D{hjlab::testing::uniform(rng, 0.5, 2), P}, GridSpec({Axis{-2, 2, 41}})},
            {GeneralLinear1D{TimeCoefficient({{0.4, 1, 0.5}, {P, 0, 0.0}}), 0.0}, GridSpec({Axis{-2, 2, 41}})},
            {RepulsiveOscillator2D{hjlab::testing::uniform(rng, 0.5, 2), P, -P}, GridSpec::uniform(2, -1, 1, 21)},
        };
        for (const auto& [family, grid] : cases) {
            const Action a = make_action(family, k);
            for (const auto& op : predefined_operators(family, k)) {
                for (double t : {0.0, 0.7, 2.0}) {
                    const ResidualReport r = operator_eigencheck_analytic(op, a, grid, t);
                    EXPECT_LE(r.rel(), 1e-12) << family.id() << " " << op.label;
                }
            }
        }
    }
}

TEST(Operators, FiniteDifferenceVersionConverges) {
    const HarmonicFamily f = RepulsiveOscillator2D{1.0, 0.5, -0.5};
    const Action a = make_action(f, kUnit);
    const auto grids = square_grids(-1, 1, 16);
    for (const auto& op : predefined_operators(f, kUnit)) {
        const RefinementStudy s = refinement_study(
            [&](const GridSpec& g) { return operator_eigencheck(op, a, kUnit, g, 0.4, 2); },
            std::span<const GridSpec>(grids));
        EXPECT_TRUE(s.pass()) << op.label;
    }
}

TEST(Operators, WrongEigenvalueFails) {
    auto op = predefined_operators(ConstantForce1D{1.0, 0.5}, kUnit).at(0);
    op.eigenvalue = 0.6;
    const ResidualReport r = operator_eigencheck_analytic(
        op, make_action(ConstantForce1D{1.0, 0.5}, kUnit), GridSpec({Axis{-1, 1, 9}}), 0.3);
    EXPECT_FALSE(r.pass());
}

TEST(Refinement, ExactAtEveryLevelIsNotApplicable) {
    const HarmonicFamily f = ConstantForce1D{1.0, 0.0};
    const Action a = make_action(f, kUnit);
    const auto grids = line_grids(-1, 1, 8);
    const RefinementStudy s = refinement_study(
        [&](const GridSpec& g) { return laplace_residual(a, g, 0.0, 2); }, std::span<const GridSpec>(grids));
    EXPECT_FALSE(s.mean_order.has_value());
    for (const auto& level : s.levels) {
        EXPECT_EQ(level.order_status, OrderStatus::NotApplicable);
        EXPECT_TRUE(level.pass());
    }
}

TEST(Refinement, AnalyticChecksCarryNoOrder) {
    const HarmonicFamily f = ConstantForce1D{1.0, 0.0};
    const auto grids = line_grids(-1, 1, 8);
    const RefinementStudy s = refinement_study(
        [&](const GridSpec& g) { return hj_residual(f, matching(f), ZeroGauge{}, kUnit, g, 0.0); },
        std::span<const GridSpec>(grids));
    EXPECT_EQ(s.levels[0].order_status, OrderStatus::Absent);
    EXPECT_TRUE(s.pass());
}

TEST(Refinement, GridsMustNest) {
    auto check = [](const GridSpec& g) { return ResidualReport{.grid = g.summary()}; };
    const std::vector<GridSpec> two = line_grids(-1, 1, 8, 2);
    EXPECT_EQ(thrown_code([&] { refinement_study(check, std::span<const GridSpec>(two)); }),
              ErrorCode::InconsistentGrids);
    const std::vector<GridSpec> skewed = {GridSpec({Axis{-1, 1, 9}}), GridSpec({Axis{-1, 1, 17}}),
                                          GridSpec({Axis{-1, 1, 35}})};
    EXPECT_EQ(thrown_code([&] { refinement_study(check, std::span<const GridSpec>(skewed)); }),
              ErrorCode::InconsistentGrids);
    const std::vector<GridSpec> shifted = {GridSpec({Axis{-1, 1, 9}}), GridSpec({Axis{-1, 2, 17}}),
                                           GridSpec({Axis{-1, 2, 33}})};
    EXPECT_EQ(thrown_code([&] { refinement_study(check, std::span<const GridSpec>(shifted)); }),
              ErrorCode::InconsistentGrids);
}

TEST(Checks, DimensionMismatchIsRejected) {
    EXPECT_EQ(thrown_code([] {
                  laplace_residual(LogCentral2D{1.0}, kUnit, GridSpec({Axis{1, 2, 9}}), 0.0, 2);
              }),
              ErrorCode::DimensionMismatch);
}
