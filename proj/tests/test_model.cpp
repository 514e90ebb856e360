#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "ptmech/model.hpp"

using namespace ptmech;

namespace {

// Independent oracle: damped Picard iteration on (xi1, xi2) in long double,
// alpha recomputed in closed form on every sweep.
struct OracleSteady {
    std::complex<long double> alpha[2];
    long double xi[2];
};

OracleSteady oracle_steady_state(const PhysicalParams& p) {
    using ld = long double;
    ld xi[2] = {0, 0};
    std::complex<ld> al[2];
    for (int it = 0; it < 20000; ++it) {
        ld n[2];
        for (int i = 0; i < 2; ++i) {
            al[i] = std::complex<ld>(0, -(ld)p.drive[i]) /
                    std::complex<ld>((ld)p.kappa[i] / 2, (ld)p.delta[i] - (ld)p.g[i] * xi[i]);
            n[i] = std::norm(al[i]);
        }
        const ld w1 = p.omega[0], w2 = p.omega[1], j = p.j_coupling;
        const ld det = w1 * w2 - j * j;
        const ld f1 = p.g[0] * n[0], f2 = p.g[1] * n[1];
        const ld x1 = (w2 * f1 + j * f2) / det;
        const ld x2 = (j * f1 + w1 * f2) / det;
        const ld change = std::max(std::abs(x1 - xi[0]), std::abs(x2 - xi[1]));
        xi[0] = 0.5L * xi[0] + 0.5L * x1;
        xi[1] = 0.5L * xi[1] + 0.5L * x2;
        if (change < 1e-17L) break;
    }
    OracleSteady o;
    for (int i = 0; i < 2; ++i) {
        o.xi[i] = xi[i];
        o.alpha[i] = std::complex<long double>(0, -(long double)p.drive[i]) /
                     std::complex<long double>((long double)p.kappa[i] / 2,
                                               (long double)p.delta[i] - (long double)p.g[i] * xi[i]);
    }
    return o;
}

}  // namespace

TEST(PhysicalParams, ValidationMessages) {
    auto p = PhysicalParams::canonical();
    EXPECT_NO_THROW(p.validate());
    p.kappa[0] = -1.0;
    try {
        p.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_STREQ(e.what(), "kappa[0] must be > 0");
    }
    p = PhysicalParams::canonical();
    p.j_coupling = 10.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = PhysicalParams::canonical();
    p.n_th[1] = -0.1;
    EXPECT_THROW(p.validate(), ValidationError);
    p = PhysicalParams::canonical();
    p.drive[0] = -5.0;
    EXPECT_THROW(p.validate(), ValidationError);
}

TEST(SteadyState, UncoupledCavityIsLinear) {
    auto p = PhysicalParams::canonical();
    p.g = {0.0, 0.0};
    p.delta = {-10.0, -10.0};
    const auto wp = solve_steady_state(p);
    const cplx expected = cplx(0.0, -5000.0) / cplx(0.5, -10.0);
    EXPECT_EQ(wp.xi[0], 0.0);
    EXPECT_NEAR(std::abs(wp.alpha[0] - expected), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(wp.alpha[0]), 499.376, 1e-3);
}

TEST(SteadyState, CanonicalPointAgainstOracle) {
    const auto p = PhysicalParams::canonical();
    const auto wp = solve_steady_state(p);
    const auto o = oracle_steady_state(p);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(wp.xi[i], (double)o.xi[i], 1e-10 * std::abs((double)o.xi[i]));
        EXPECT_NEAR(std::abs(wp.alpha[i] - std::complex<double>(o.alpha[i])), 0.0, 1e-9 * std::abs(wp.alpha[i]));
    }
    EXPECT_LT(wp.residual, 1e-10);
    // frozen oracle values
    EXPECT_NEAR(std::abs(wp.g_eff[0]), 0.0499364, 5e-8);
    EXPECT_NEAR(std::abs(wp.g_eff[1]), 0.0499389, 5e-8);
    EXPECT_NEAR(wp.delta_eff[0], -10.00025, 1e-5);
    EXPECT_NEAR(wp.delta_eff[1], 9.99975, 1e-5);
    EXPECT_NEAR(std::abs(wp.g_eff[0]), 1.0 / 20.0, 0.01 / 20.0);
    EXPECT_EQ(wp.gain_sign(0), +1);
    EXPECT_EQ(wp.gain_sign(1), -1);
    EXPECT_TRUE(wp.warnings.empty());
}

TEST(SteadyState, SwapSymmetryIsExact) {
    const auto p = PhysicalParams::canonical();
    const auto a = solve_steady_state(p);
    const auto b = solve_steady_state(p.swapped());
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(std::abs(a.alpha[i] - b.alpha[1 - i]), 0.0, 1e-12 * std::abs(a.alpha[i]));
        EXPECT_NEAR(a.xi[i], b.xi[1 - i], 1e-12 * std::abs(a.xi[i]));
        EXPECT_NEAR(a.rate[i], b.rate[1 - i], 1e-14);
        EXPECT_NEAR(a.spring_shift[i], b.spring_shift[1 - i], 1e-16);
    }
}

TEST(SteadyState, DimensionalScaling) {
    const auto p = PhysicalParams::canonical();
    const double c = 3.7;
    PhysicalParams s = p;
    for (int i = 0; i < 2; ++i) {
        s.kappa[i] *= c;
        s.gamma[i] *= c;
        s.omega[i] *= c;
        s.delta[i] *= c;
        s.drive[i] *= c;
        s.g[i] *= c;
    }
    s.j_coupling *= c;
    const auto a = solve_steady_state(p);
    const auto b = solve_steady_state(s);
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(b.xi[i], a.xi[i], 1e-10 * std::abs(a.xi[i]));
        EXPECT_NEAR(std::abs(b.alpha[i] - a.alpha[i]), 0.0, 1e-10 * std::abs(a.alpha[i]));
        EXPECT_NEAR(b.rate[i], c * a.rate[i], 1e-10 * c * a.rate[i]);
    }
}

TEST(SteadyState, ResidualBelowTolAcrossDrives) {
    auto p = PhysicalParams::canonical();
    for (double drive : {0.0, 100.0, 5000.0, 6700.0, 10000.0}) {
        p.drive = {drive, drive};
        const auto wp = solve_steady_state(p);
        EXPECT_LT(wp.residual, 1e-10) << drive;
        EXPECT_GE(wp.rate[0], 0.0);
        EXPECT_GE(wp.spring_shift[1], 0.0);
    }
}

TEST(SteadyState, StrongDriveNearFoldWarnsOrConverges) {
    // Red-detuned single-cavity Kerr response: large g * drive^2 pushes the
    // cavity through the bistable fold.
    auto p = PhysicalParams::canonical();
    p.g = {2e-2, 1e-4};
    p.delta = {10.0, 10.0};
    p.drive = {200.0, 0.0};
    try {
        const auto wp = solve_steady_state(p);
        EXPECT_LT(wp.residual, 1e-10);
    } catch (const NoConvergence&) {
        SUCCEED();
    }
}

TEST(SteadyState, SingularMechanicalBlock) {
    auto p = PhysicalParams::canonical();
    p.omega = {1.0, 1.0};
    p.j_coupling = 1.0;  // also violates j < min(omega)
    EXPECT_THROW(solve_steady_state(p), ValidationError);
}

TEST(Rates, KnownValues) {
    EXPECT_EQ(optical_spring_shift(0.0, 10.0, 1.0), 0.0);
    EXPECT_EQ(optomechanical_rate(0.0, 10.0, 1.0), 0.0);
    EXPECT_NEAR(optical_spring_shift(0.05, 10.0, 1.0), 0.2 / 1601.0, 1e-18);
    EXPECT_NEAR(optical_spring_shift(0.05, 10.0, 1.0), 1.0 / 8000.0, 0.01 / 8000.0);
    EXPECT_NEAR(optomechanical_rate(0.05, 10.0, 1.0), 0.01 * 1600.0 / 1601.0, 1e-17);
    EXPECT_NEAR(optomechanical_rate(cplx(0.0, 0.05), 10.0, 1.0), 9.99375e-3, 1e-8);
    EXPECT_THROW(optomechanical_rate(0.05, 10.0, 0.0), DomainError);
}

TEST(Rates, MonotoneInCoupling) {
    double prev_r = -1.0, prev_s = -1.0;
    for (int k = 0; k <= 100; ++k) {
        const double g = 0.001 * k;
        const double r = optomechanical_rate(g, 10.0, 1.0);
        const double s = optical_spring_shift(g, 10.0, 1.0);
        EXPECT_GT(r, prev_r);
        EXPECT_GT(s, prev_s);
        prev_r = r;
        prev_s = s;
    }
}

TEST(Rates, GainSignFollowsDetuning) {
    EXPECT_EQ(mechanical_gain_sign(-10.0), +1);
    EXPECT_EQ(mechanical_gain_sign(10.0), -1);
}

TEST(Rates, DriveAt6700GivesShiftAsWritten) {
    auto p = PhysicalParams::canonical();
    p.drive = {6700.0, 6700.0};
    const auto wp = solve_steady_state(p);
    // the rate formula itself, evaluated at the scaled coupling
    EXPECT_NEAR(wp.spring_shift[0], optical_spring_shift(wp.g_eff[0], 10.0, 1.0), 1e-18);
    EXPECT_GT(wp.spring_shift[0], 2.0e-4);
    EXPECT_LT(wp.spring_shift[0], 2.5e-4);
}

TEST(Threshold, KnownValuesAndDomain) {
    EXPECT_EQ(pt_threshold(10.0, 0.0), 0.0);
    EXPECT_NEAR(pt_threshold(10.0, 10.0), 2.0 * std::numbers::sqrt2 * 10.0, 1e-12);
    EXPECT_NEAR(pt_threshold(10.0, 0.01), 0.02, 1e-8);
    EXPECT_NEAR(pt_threshold(10.0, 0.01) / 0.02 - 1.0, 1.25e-7, 1e-9);
    EXPECT_THROW(pt_threshold(10.0, 10.5), DomainError);
}

TEST(Threshold, SmallCouplingLimitIsTwoJ) {
    double prev = 1.0;
    for (double x : {1e-2, 1e-3, 1e-4}) {
        const double dev = std::abs(pt_threshold(1.0, x) / (2.0 * x) - 1.0);
        EXPECT_LT(dev, prev);
        EXPECT_LT(dev, x * x);
        prev = dev;
    }
}

TEST(Thermal, Occupations) {
    EXPECT_EQ(thermal_occupation(1e6, 0.0), 0.0);
    EXPECT_NEAR(bose_einstein(std::log(2.0)), 1.0, 1e-15);
    EXPECT_NEAR(bose_einstein(1e-3), 1.0 / 1e-3 - 0.5, 1e-4);
    const double t = constants::hbar * 1e7 / (constants::k_boltzmann * std::log(2.0));
    EXPECT_NEAR(thermal_occupation(1e7, t), 1.0, 1e-12);
    EXPECT_THROW(thermal_occupation(1e7, -1.0), DomainError);
}

TEST(GammaEff, BalanceGate) {
    const auto wp = solve_steady_state(PhysicalParams::canonical());
    EXPECT_NEAR(balanced_gamma_eff(wp), 0.5 * (wp.rate[0] + wp.rate[1]), 1e-18);
    auto p = PhysicalParams::canonical();
    p.drive = {5000.0, 4000.0};
    EXPECT_THROW(balanced_gamma_eff(solve_steady_state(p)), RegimeError);
}

TEST(WorkingPoint, FromEffectiveBackfills) {
    const auto p = PhysicalParams::canonical();
    const auto wp = WorkingPoint::from_effective(p, {0.05, 0.05}, {-10.0, 10.0});
    EXPECT_NEAR(wp.rate[0], 0.01 * 1600.0 / 1601.0, 1e-17);
    EXPECT_NEAR(std::abs(wp.alpha[0]), 500.0, 1e-9);
    EXPECT_FALSE(wp.from_steady_state);
}
