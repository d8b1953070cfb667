#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <oddcat/conditional_state.hpp>
#include <oddcat/fock.hpp>
#include <oddcat/rng.hpp>

#include "support/fock_oracle.hpp"
#include "support/quad2d.hpp"

using namespace oddcat;

namespace {

// gamma = I + 2 B B^T is symmetric and sits above the vacuum floor for any B,
// with generic x-p correlations the physical source never produces
TwoModeCovariance random_covariance(Rng& rng, double spread) {
    Mat4 B{};
    for (int i = 0; i < 16; ++i) B[static_cast<size_t>(i)] = rng.uniform(-spread, spread);
    TwoModeCovariance cov;
    cov.gamma = mat4_identity();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0;
            for (int k = 0; k < 4; ++k) acc += at(B, i, k) * at(B, j, k);
            at(cov.gamma, i, j) += 2.0 * acc;
        }
    return cov;
}

TwoModeCovariance random_model_covariance(Rng& rng) {
    OpoModel m;
    m.pump_parameter = gain_to_pump(rng.uniform(1.3, 3.5));
    m.cavity_hwhm_hz = rng.uniform(3e6, 6e6);
    m.eta_opo = rng.uniform(0.5, 1.0);
    m.eta_pr = rng.uniform(0.5, 1.0);
    m.bs_reflectivity = rng.uniform(0.02, 0.12);
    m.trigger_filter_hwhm_hz = rng.uniform(3e7, 8e7);
    const auto trig = TemporalMode::trigger_exponential(m.trigger_filter_hwhm_hz, 0.0);
    const auto sig = TemporalMode::ansatz(rng.uniform(5e6, 1.5e7), rng.uniform(2e7, 7e7),
                                          -trigger_group_delay(m.trigger_filter_hwhm_hz));
    return assemble_covariance(m, trig, sig);
}

}  // namespace

TEST_CASE("Fock conversion agrees with the position-representation oracle") {
    // The engine goes Wigner -> Gauss-Hermite x Laguerre kernels. The oracle
    // goes Wigner -> <x|rho|x'> -> oscillator wavefunction overlaps, entirely
    // through closed-form Gaussian moments. Element-wise agreement to 1e-6.
    Rng rng(41);
    const int nmax = 8;
    int checked = 0;
    for (int trial = 0; trial < 24; ++trial) {
        INFO("trial " << trial);
        const TwoModeCovariance cov = (trial < 6)    ? random_covariance(rng, 0.15)
                                      : (trial < 12) ? random_covariance(rng, 0.6)
                                                     : random_model_covariance(rng);
        const double dark = (trial % 3 == 0) ? 0.0 : rng.uniform(0.0, 0.2);

        const auto st = subtract_photon(cov, dark);
        const auto rho = fock_from_state(st, nmax);
        const auto poly = testsupport::herald_oracle(cov, dark);
        const auto ref = testsupport::fock_matrix_oracle(poly, nmax);

        CHECK(st.normalization() == Catch::Approx(1.0).margin(1e-10));
        CHECK(std::abs(rho.trace_real() - 1.0) < 0.2);  // n_max truncation only
        CHECK(rho.hermiticity_violation() < 1e-12);

        double worst = 0.0;
        for (int m = 0; m <= nmax; ++m)
            for (int n = 0; n <= nmax; ++n) {
                const auto got = rho.at(m, n);
                const auto want = ref[static_cast<size_t>(m) * (nmax + 1) + n];
                worst = std::max({worst, std::abs(got.real() - want.real()),
                                  std::abs(got.imag() - want.imag())});
            }
        INFO("worst element deviation " << worst);
        CHECK(worst < 1e-6);
        ++checked;
    }
    REQUIRE(checked >= 20);
}

TEST_CASE("click probability matches the trigger photon number") {
    Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const auto cov = (trial % 2) ? random_covariance(rng, 0.5) : random_model_covariance(rng);
        const auto st = subtract_photon(cov, 0.0);
        CHECK(st.click_probability ==
              Catch::Approx(testsupport::herald_click_probability(cov)).epsilon(1e-12));
        // mean photon number of the trigger block
        const double n_t = 0.25 * (at(cov.gamma, 0, 0) + at(cov.gamma, 1, 1)) - 0.5;
        CHECK(st.click_probability == Catch::Approx(n_t).epsilon(1e-12));
        CHECK(st.click_probability > 0.0);
    }
}

TEST_CASE("Fock reconstruction reproduces the analytic Wigner function") {
    Rng rng(43);
    for (int trial = 0; trial < 4; ++trial) {
        INFO("trial " << trial);
        const auto cov = (trial % 2) ? random_covariance(rng, 0.45) : random_model_covariance(rng);
        const double dark = (trial == 3) ? 0.12 : 0.0;
        const auto st = subtract_photon(cov, dark);
        const auto rho = fock_from_state(st, 24);

        for (double x : {-1.2, 0.0, 0.8})
            for (double p : {-0.9, 0.3, 1.4}) {
                INFO("x=" << x << " p=" << p);
                CHECK(wigner_from_fock(rho, x, p) == Catch::Approx(st.wigner(x, p)).margin(1e-6));
            }
        CHECK(w00_from_fock(rho) == Catch::Approx(st.wigner_origin()).margin(1e-6));
    }
}

TEST_CASE("Gaussian moments match ladder-operator sums") {
    Rng rng(44);
    for (int trial = 0; trial < 6; ++trial) {
        INFO("trial " << trial);
        const auto cov = (trial % 2) ? random_covariance(rng, 0.4) : random_model_covariance(rng);
        const auto st = subtract_photon(cov, trial % 3 == 0 ? 0.0 : 0.08);
        const int nmax = 30;
        const auto rho = fock_from_state(st, nmax);

        double nbar = 0.0;
        std::complex<double> a2{0.0, 0.0};
        for (int n = 0; n <= nmax; ++n) nbar += n * rho.at(n, n).real();
        // Tr(rho a^2) = sum_n sqrt((n+1)(n+2)) <n+2| rho |n>
        for (int n = 0; n + 2 <= nmax; ++n)
            a2 += std::sqrt((n + 1.0) * (n + 2.0)) * rho.at(n + 2, n);
        const auto mom = st.second_moments();
        CHECK(st.mean_photons() == Catch::Approx(nbar).margin(1e-8));
        // <x^2> = Re<a^2>/1 ... x = (a + a+)/sqrt2: <x^2> = (2nbar + 1)/2 + Re<a^2>
        CHECK(mom.a == Catch::Approx(0.5 * (2.0 * nbar + 1.0) + a2.real()).margin(1e-8));
        CHECK(mom.d == Catch::Approx(0.5 * (2.0 * nbar + 1.0) - a2.real()).margin(1e-8));
        // symmetrized cross moment <xp + px>/2 = Im<a^2>
        CHECK(0.5 * (mom.b + mom.c) == Catch::Approx(a2.imag()).margin(1e-8));
    }
}

TEST_CASE("dark heralds interpolate the Wigner origin linearly") {
    Rng rng(45);
    const auto cov = random_model_covariance(rng);
    const auto clean = subtract_photon(cov, 0.0);
    const double w_clean = clean.wigner_origin();
    const double w_gauss = 1.0 / (two_pi * std::sqrt(clean.sigma.det()));
    double prev = w_clean;
    for (double w : {0.2, 0.5, 0.8}) {
        const auto st = subtract_photon(cov, w);
        const double expect = (1.0 - w) * w_clean + w * w_gauss;
        CHECK(st.wigner_origin() == Catch::Approx(expect).epsilon(1e-12));
        CHECK(st.wigner_origin() > prev);
        prev = st.wigner_origin();
    }
}

TEST_CASE("quadrature marginals integrate out of the Wigner function") {
    Rng rng(46);
    for (int trial = 0; trial < 6; ++trial) {
        INFO("trial " << trial);
        const auto cov = (trial % 2) ? random_covariance(rng, 0.5) : random_model_covariance(rng);
        const auto st = subtract_photon(cov, trial % 3 == 0 ? 0.0 : 0.15);
        for (double theta : {0.0, 0.7, 2.1}) {
            const auto marg = st.marginal_along(theta);
            // normalization: integral of N(q; var)(beta q^2 + delta) is
            // beta var + delta = 1
            CHECK(marg.beta * marg.var + marg.delta == Catch::Approx(1.0).margin(1e-10));
            const double ct = std::cos(theta), sth = std::sin(theta);
            for (double q : {-1.3, -0.2, 0.9}) {
                const double direct = testsupport::integrate(
                    [&](double s) {
                        return st.wigner(q * ct - s * sth, q * sth + s * ct);
                    },
                    -12.0, 12.0, 1e-12);
                const double closed = std::exp(-0.5 * q * q / marg.var) /
                                      std::sqrt(two_pi * marg.var) *
                                      (marg.beta * q * q + marg.delta);
                CHECK(direct == Catch::Approx(closed).margin(1e-9));
            }
        }
    }
}

TEST_CASE("conditioning guards") {
    TwoModeCovariance vac;  // no trigger photons: nothing to herald on
    CHECK_THROWS_AS(subtract_photon(vac, 0.0), numeric_error);

    TwoModeCovariance sub;
    for (auto& v : sub.gamma) v *= 0.7;
    CHECK_THROWS_AS(subtract_photon(sub, 0.0), numeric_error);

    Rng rng(47);
    const auto cov = random_covariance(rng, 0.5);
    CHECK_THROWS_AS(subtract_photon(cov, -0.1), config_error);
    CHECK_THROWS_AS(subtract_photon(cov, 1.2), config_error);
}
