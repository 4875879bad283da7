#include <doctest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "qpe/channel.hpp"
#include "qpe/errors.hpp"
#include "qpe/qfi.hpp"

using namespace qpe;

namespace {

// RLD of the single-use Choi pair, done by hand. C lives on span{|00>, |11>}
// as [[1, c], [c*, 1]] with c = (1-p) e^{i theta}, D = [[0, i c], [-i c*, 0]],
// so (D C^{-1} D)_{00,00} = |c|^2 / (1 - |c|^2) and the partial trace over the
// output is |c|^2 / (1 - |c|^2) times the identity.
double rld_by_hand(double p) {
    const double c2 = (1.0 - p) * (1.0 - p);
    return c2 / (1.0 - c2);
}

} // namespace

TEST_CASE("single-use RLD from the Choi matrix matches the hand computation") {
    CHECK(rld_channel_qfi_numeric(ChannelParams(0.0, 0.5)).value() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CounterRng rng(101, 0);
    for (int i = 0; i < 100; ++i) {
        const double p = gen::uniform(rng, 0.01, 0.99), theta = gen::uniform(rng, -3.0, 3.0);
        const double numeric = rld_channel_qfi_numeric(ChannelParams(theta, p)).value();
        CHECK(numeric == doctest::Approx(rld_by_hand(p)).epsilon(1e-9));
        CHECK(numeric == doctest::Approx(rld_channel_qfi_numeric(ChannelParams(0.0, p)).value()).epsilon(1e-10));
    }
}

TEST_CASE("closed form carries twice the Choi-numeric value") {
    for (double p = 0.1; p < 0.95; p += 0.1) {
        const double closed = rld_channel_qfi_closed(p).value();
        CHECK(closed == doctest::Approx(2.0 * (1.0 - p) * (1.0 - p) / (p * (2.0 - p))));
        CHECK(closed == doctest::Approx(2.0 * rld_by_hand(p)).epsilon(1e-12));
    }
    CHECK(rld_channel_qfi_closed(0.5).value() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("noiseless channel has unbounded RLD") {
    CHECK(rld_channel_qfi_closed(0.0).is_unbounded());
    CHECK(rld_channel_qfi_numeric(ChannelParams(0.4, 0.0)).is_unbounded());
    CHECK(n_use_rld_bound(0.0, 8).is_unbounded());
    CHECK_THROWS_AS(rld_channel_qfi_closed(0.0).value(), NumericalError);
}

TEST_CASE("RLD of two parallel uses is additive") {
    CounterRng rng(102, 0);
    for (int i = 0; i < 20; ++i) {
        const ChannelParams cp(gen::uniform(rng, -3.0, 3.0), gen::uniform(rng, 0.02, 0.98));
        const ChoiPair two = two_use_choi(cp);
        CHECK(std::abs(two.c.trace() - 4.0) < 1e-12);
        CHECK(rld_from_choi(two.c, two.d, 4, 4).value() ==
              doctest::Approx(2.0 * rld_channel_qfi_numeric(cp).value()).epsilon(1e-9));
    }
}

TEST_CASE("n-use bound is linear in n at fixed p") {
    CHECK(n_use_rld_bound(0.2, 10).value() == doctest::Approx(10.0 * rld_channel_qfi_closed(0.2).value()));
    CHECK_THROWS_AS(n_use_rld_bound(0.2, 0), ValidationError);
}

TEST_CASE("SLD information of sequential and GHZ probes") {
    for (double p : {0.0, 0.01, 0.1, 0.3}) {
        for (int n : {1, 2, 5, 16, 64}) {
            const ChannelParams cp(0.3, p);
            const double closed = static_cast<double>(n) * n * std::pow(1.0 - p, 2 * n);
            CHECK(ghz_sld_qfi(p, n) == doctest::Approx(closed).epsilon(1e-12));
            CHECK(sequential_sld_qfi(p, n) == doctest::Approx(closed).epsilon(1e-12));
            CHECK(sld_qfi(ghz_family_point(cp, n)) == doctest::Approx(closed).epsilon(1e-8));
            CHECK(sld_qfi(sequential_family_point(cp, n)) == doctest::Approx(closed).epsilon(1e-8));
        }
    }
}

TEST_CASE("analytic and finite-difference derivatives agree") {
    const ChannelParams cp(-0.8, 0.05);
    for (int n : {1, 3, 7}) {
        const StateFamilyPoint a = ghz_family_point(cp, n);
        const StateFamilyPoint f = ghz_family_point(cp, n, Derivative::FiniteDifference, 1e-5);
        CHECK((a.drho - f.drho).norm() < 1e-7);
        CHECK(sld_qfi(a) == doctest::Approx(sld_qfi(f)).epsilon(1e-6));
    }
}

TEST_CASE("SLD never exceeds RLD on random qubit families") {
    CounterRng rng(103, 0);
    for (int i = 0; i < 100; ++i) {
        const ChannelParams cp(gen::uniform(rng, -3.0, 3.0), gen::uniform(rng, 0.01, 0.99));
        const int m = gen::integer(rng, 1, 6);
        const StateFamilyPoint pt = sequential_family_point(cp, m);
        CHECK(sld_qfi(pt) <= rld_state_qfi(pt).value() * (1.0 + 1e-10));
    }
}
