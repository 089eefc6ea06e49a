#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mmcool/core_physics.hpp"
#include "mmcool/pipeline.hpp"
#include "oracles.hpp"

using namespace mmcool;

namespace {

PhysicalParams fig5() { return PhysicalParams{}; }

double at_phase(const PhysicalParams& p, double phase) {
    return position_with_phase(p, constants::speed_of_light * p.delay, phase);
}

} // namespace

TEST(CouplingConstant, UnitGeometricFactor) {
    PhysicalParams p;
    p.beam_waist = std::sqrt(4.0 * p.cross_section() / constants::pi);
    EXPECT_NEAR(constants::two_pi * coupling_constant(p), p.half_linewidth, 1e-9 * p.half_linewidth);
}

TEST(CouplingConstant, InverseSquareInWaist) {
    PhysicalParams p;
    const double g = coupling_constant(p);
    p.beam_waist *= 0.5;
    EXPECT_NEAR(coupling_constant(p) / g, 4.0, 1e-12);
}

TEST(CouplingConstant, RubidiumRegression) {
    // Gamma = pi * 6.0666 MHz, lambda = 780.241 nm, w = 0.7 um.
    EXPECT_NEAR(coupling_constant(fig5()), 2291018.304898308, 1e-6);
}

TEST(CouplingConstant, RejectsNonPositiveWaist) {
    PhysicalParams p;
    p.beam_waist = 0.0;
    EXPECT_THROW(coupling_constant(p), DomainError);
}

TEST(FirstOrderAmplitudes, VanishAtMirror) {
    const auto r = first_order_amplitudes(fig5(), 0.0, 1e-6, fig5().pump_frequency() + 1e6);
    EXPECT_EQ(std::abs(r.a1), 0.0);
    EXPECT_EQ(std::abs(r.b1), 0.0);
}

TEST(FirstOrderAmplitudes, PumpFrequencyLimit) {
    const PhysicalParams p = fig5();
    const double x = at_phase(p, 0.3);
    const double t0 = 5.0 / p.half_linewidth;
    const auto r = first_order_amplitudes(p, x, t0, p.pump_frequency());
    const double s0 = std::sin(0.3);
    EXPECT_NEAR(r.a1.real(), 0.0, 1e-12 * t0);
    EXPECT_NEAR(r.a1.imag(), -t0 * s0 * s0, 1e-9 * t0);
}

TEST(FirstOrderAmplitudes, SeriesJoinsClosedForm) {
    const PhysicalParams p = fig5();
    const double x = at_phase(p, 1.1);
    const double t0 = 4.0 / p.half_linewidth;
    const double y = first_order_series_threshold;
    const auto below = first_order_amplitudes(p, x, t0, p.pump_frequency() + 0.999 * y / t0);
    const auto above = first_order_amplitudes(p, x, t0, p.pump_frequency() + 1.001 * y / t0);
    EXPECT_LT(std::abs(below.a1 - above.a1) / std::abs(below.a1), 1e-6);
    EXPECT_LT(std::abs(below.b1 - above.b1) / std::abs(below.b1), 1e-6);
}

TEST(FirstOrderAmplitudes, AgreeWithModeIntegration) {
    const PhysicalParams p = fig5();
    const oracle::CombIntegrator comb{128, 0.1 * p.half_linewidth, p.pump_frequency()};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < 4; ++n) {
        const int k = static_cast<int>(u(rng) * 128);
        const double x = constants::speed_of_light * p.delay + u(rng) * p.wavelength;
        const double t0 = (2.0 + 8.0 * u(rng)) / p.half_linewidth;
        const double w = comb.omega(k);
        const int steps = static_cast<int>(t0 * 6.5 * p.half_linewidth / 0.01) + 200;
        const auto [a1, b1] = comb.first_order(k, x, t0, 1e-4 / t0,
                                               1e-4 * constants::speed_of_light / (w * t0), steps);
        const auto r = first_order_amplitudes(p, x, t0, w);
        EXPECT_LT(std::abs(a1 - r.a1) / std::abs(r.a1), 1e-3) << "mode " << k;
        EXPECT_LT(std::abs(b1 - r.b1) / std::abs(r.b1), 1e-3) << "mode " << k;
    }
}

TEST(VelocityForce, ZeroAtRestAndAtNodes) {
    const PhysicalParams p = fig5();
    EXPECT_EQ(velocity_force(p, at_phase(p, 0.7), 0.0), 0.0);
    EXPECT_NEAR(velocity_force(p, at_phase(p, 0.0), 1.0), 0.0, 1e-6 * std::abs(velocity_force(p, at_phase(p, constants::pi / 8), 1.0)));
}

TEST(VelocityForce, EqualsMinusFrictionTimesMomentum) {
    const PhysicalParams p = fig5();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> phase(0.0, constants::two_pi), vel(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x = at_phase(p, phase(rng));
        const double v = vel(rng);
        const double f = velocity_force(p, x, v);
        const double ref = friction_coefficient(p, x) * p.mass * v;
        EXPECT_NEAR(f + ref, 0.0, 1e-14 * std::abs(friction_coefficient(p, at_phase(p, constants::pi / 8)) * p.mass));
    }
}

TEST(VelocityForce, OddInVelocity) {
    const PhysicalParams p = fig5();
    const double x = at_phase(p, 0.2);
    EXPECT_EQ(velocity_force(p, x, 0.3), -velocity_force(p, x, -0.3));
}

TEST(FrictionCoefficient, ZeroAtNodesAndOddInSine) {
    const PhysicalParams p = fig5();
    const double top = friction_coefficient(p, at_phase(p, constants::pi / 8));
    EXPECT_GT(top, 0.0);
    EXPECT_NEAR(friction_coefficient(p, at_phase(p, constants::pi / 4)), 0.0, 1e-6 * top);
    EXPECT_NEAR(friction_coefficient(p, at_phase(p, 3 * constants::pi / 8)), -top, 1e-6 * top);
}

TEST(FrictionCoefficient, PeriodicInQuarterWavelength) {
    const PhysicalParams p = fig5();
    const double x = at_phase(p, 0.37);
    const double period = constants::pi / (2.0 * p.pump_wavenumber);
    EXPECT_NEAR(friction_coefficient(p, x + period), friction_coefficient(p, x), 1e-7 * std::abs(friction_coefficient(p, x)));
}

TEST(FrictionCoefficient, MillisecondCoolingAtTenNanoseconds) {
    PhysicalParams p = with(fig5(), 1e-6, 10e-9, 0.1);
    const double t = cooling_time(p, max_friction_position(p));
    EXPECT_NEAR(1.0 / t, 334.247, 0.001);
    EXPECT_GT(t, 1e-4);
    EXPECT_LT(t, 1e-2);
}

TEST(CoolingTime, Scaling) {
    PhysicalParams p = with(fig5(), 1e-6, 10e-9, 0.1);
    const double x = max_friction_position(p);
    const double t = cooling_time(p, x);
    PhysicalParams q = with(p, 1e-6, 20e-9, 0.1);
    EXPECT_NEAR(cooling_time(q, x), t / 2, 1e-12 * t);
    q = with(p, 2e-6, 10e-9, 0.1);
    EXPECT_NEAR(cooling_time(q, x), 4 * t, 1e-12 * t);
}

TEST(CoolingTime, HeatingPositionIsAnError) {
    const PhysicalParams p = fig5();
    EXPECT_THROW(cooling_time(p, at_phase(p, 3 * constants::pi / 8)), NoCoolingError);
}

TEST(CoolingTime, SweepShape) {
    Config c;
    c.sweep.waist_min = 0.5e-6;
    c.sweep.waist_max = 5e-6;
    const Dataset d = cooling_time_table(c);
    for (std::size_t j = 1; j < d.data.size(); ++j)
        for (std::size_t i = 1; i < d.data[j].size(); ++i) {
            EXPECT_GT(d.data[j][i], d.data[j][i - 1]);
            if (j > 1) {
                EXPECT_LT(d.data[j][i], d.data[j - 1][i]);
            }
        }
}

TEST(AveragedFriction, HalfOfLocalValueAtZeroAmplitude) {
    const PhysicalParams p = fig5();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> phase(0.0, constants::two_pi);
    for (int i = 0; i < 10; ++i) {
        const double x = at_phase(p, phase(rng));
        const double rho = friction_coefficient(p, x);
        EXPECT_NEAR(averaged_friction(p, {x, 0.0, 0.0}), 0.5 * rho, 1e-12 * std::abs(rho) + 1e-20);
    }
}

TEST(AveragedFriction, MatchesBesselClosedForm) {
    const PhysicalParams p = fig5();
    const double x = max_friction_position(p);
    const double top = friction_coefficient(p, x);
    for (double dl = 0.0; dl <= 0.5; dl += 0.01) {
        const double delta = dl * p.wavelength;
        EXPECT_NEAR(averaged_friction(p, {x, 0.0, delta}), oracle::bessel_averaged_friction(p, x, delta), 1e-10 * top);
    }
    const double delta = 0.05 * p.wavelength;
    const double ref = oracle::bessel_averaged_friction(p, x, delta);
    EXPECT_LT(std::abs(averaged_friction(p, {x, 0.0, delta}) / ref - 1.0), 1e-8);
}

TEST(AveragedFriction, SignChangeAtBesselZero) {
    const PhysicalParams p = with(fig5(), 1e-6, 10e-9, 0.1);
    EXPECT_NEAR(friction_zero_crossing(p) * p.wavelength / p.pump_wavelength(), oracle::bessel_zero_wavelengths(), 1e-6);
    EXPECT_NEAR(friction_zero_crossing(p), 0.1525, 0.002);
}

TEST(AveragedFriction, RejectsNegativeAmplitude) {
    EXPECT_THROW(averaged_friction(fig5(), {1.0, 0.0, -1e-9}), DomainError);
}

TEST(DiffusionConstant, ScalingAndRegression) {
    PhysicalParams p = fig5();
    EXPECT_NEAR(diffusion_constant(p) / 1.044631329082655e-48, 1.0, 1e-12);
    const double d = diffusion_constant(p);
    p.saturation *= 2;
    EXPECT_NEAR(diffusion_constant(p), 2 * d, 1e-12 * d);
    p.saturation = 0;
    EXPECT_EQ(diffusion_constant(p), 0.0);
}

TEST(StationaryTemperature, FigureFiveValue) {
    const PhysicalParams p = fig5();
    const double t = stationary_temperature(p, max_friction_position(p));
    EXPECT_NEAR(t, 0.77097e-3, 1e-8);
    EXPECT_LT(std::abs(t / 0.76e-3 - 1.0), 0.03);
}

TEST(StationaryTemperature, IndependentOfSaturationAndDetuning) {
    PhysicalParams p = fig5();
    const double x = max_friction_position(p);
    const double t = stationary_temperature(p, x);
    p.saturation = 0.5;
    EXPECT_NEAR(stationary_temperature(p, x), t, 1e-15);
}

TEST(StationaryTemperature, InverseInDelay) {
    PhysicalParams p = fig5();
    const double t = stationary_temperature(p, max_friction_position(p));
    p.delay *= 2;
    EXPECT_NEAR(stationary_temperature(p, max_friction_position(p)), t / 2, 1e-9 * t);
}

TEST(StationaryTemperature, TimesSineIsConstant) {
    const PhysicalParams p = fig5();
    const double ref = stationary_temperature(p, max_friction_position(p));
    for (double ph = 0.05; ph < constants::pi / 4; ph += 0.05) {
        const double x = at_phase(p, ph);
        EXPECT_NEAR(stationary_temperature(p, x) * std::sin(4 * ph), ref, 1e-6 * ref);
    }
}

TEST(StationaryTemperature, HeatingRegionIsAnError) {
    const PhysicalParams p = fig5();
    EXPECT_THROW(stationary_temperature(p, at_phase(p, 3 * constants::pi / 8)), NoCoolingError);
}

TEST(Units, RoundTripIsInvolutive) {
    const UnitSystem u(fig5());
    for (double v : {1e-9, 0.37, 12.5, 3e5}) {
        EXPECT_DOUBLE_EQ(u.from_time(u.to_time(v)), v);
        EXPECT_DOUBLE_EQ(u.from_frequency(u.to_frequency(v)), v);
        EXPECT_DOUBLE_EQ(u.from_length(u.to_length(v)), v);
        EXPECT_DOUBLE_EQ(u.from_momentum(u.to_momentum(v)), v);
        EXPECT_DOUBLE_EQ(u.from_energy(u.to_energy(v)), v);
        EXPECT_DOUBLE_EQ(u.from_temperature(u.to_temperature(v)), v);
        EXPECT_DOUBLE_EQ(u.from_mass(u.to_mass(v)), v);
    }
}

TEST(Params, ValidationWarnsNearResonance) {
    PhysicalParams p = fig5();
    EXPECT_TRUE(validate(p).empty());
    p.detuning = -2.0 * p.half_linewidth;
    EXPECT_EQ(validate(p).size(), 1u);
    p.mass = -1.0;
    EXPECT_THROW(validate(p), DomainError);
}
