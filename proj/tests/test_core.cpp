#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "generators.hpp"
#include "qpe/channel.hpp"
#include "qpe/curve.hpp"
#include "qpe/errors.hpp"
#include "qpe/linalg.hpp"
#include "qpe/parallel.hpp"
#include "qpe/rng.hpp"
#include "qpe/stats.hpp"

using namespace qpe;
using std::numbers::pi;

namespace {

// The channel written out entrywise: populations kept, coherence scaled by
// (1-p) e^{i theta}.
ComplexMatrix channel_oracle(const ComplexMatrix& rho, double theta, double p) {
    ComplexMatrix out = rho;
    out(0, 1) = rho(0, 1) * (1.0 - p) * std::polar(1.0, theta);
    out(1, 0) = rho(1, 0) * (1.0 - p) * std::polar(1.0, -theta);
    return out;
}

} // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams are reproducible and uniform") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        differs |= x != c.uniform();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
    CHECK(differs);

    std::vector<double> draws;
    CounterRng r(1, 0);
    for (int i = 0; i < 200000; ++i) draws.push_back(r.uniform());
    const double ks = ks_distance(EmpiricalSample(draws), [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(ks < 1.63 / std::sqrt(200000.0)); // 1% critical value
}

TEST_CASE("chunked parallel sums do not depend on the worker count") {
    const ChunkPlan plan{100003, 1000};
    auto run = [&](unsigned threads) {
        std::vector<double> partial(plan.chunks());
        parallel_chunks(plan, threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) s += CounterRng(3, i).uniform();
            partial[chunk] = s;
        });
        double total = 0.0;
        for (double s : partial) total += s;
        return total;
    };
    const double one = run(1);
    CHECK(one == run(3));
    CHECK(one == run(8));
}

TEST_CASE("reduce_angle lands in (-pi, pi]") {
    CHECK(reduce_angle(pi) == doctest::Approx(pi));
    CHECK(reduce_angle(-pi) == doctest::Approx(pi));
    CHECK(reduce_angle(3.0 * pi / 2.0) == doctest::Approx(-pi / 2.0));
    CounterRng rng(5, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = gen::uniform(rng, -100.0, 100.0);
        const double r = reduce_angle(x);
        CHECK(r > -pi);
        CHECK(r <= pi);
        CHECK(std::abs(std::remainder(x - r, 2.0 * pi)) < 1e-9);
    }
}

TEST_CASE("channel matches its entrywise action on random states") {
    CounterRng rng(11, 0);
    for (int i = 0; i < 200; ++i) {
        const double theta = gen::uniform(rng, -pi, pi), p = rng.uniform();
        const DensityMatrix rho = gen::density(rng, 2);
        const DensityMatrix out = apply_channel(ChannelParams(theta, p), rho);
        CHECK((out.matrix() - channel_oracle(rho.matrix(), theta, p)).norm() < 1e-13);
        CHECK(std::abs(out.matrix().trace() - 1.0) < 1e-13);
        CHECK(hermitian_eig(out.matrix()).values.minCoeff() > -1e-13);
    }
}

TEST_CASE("Choi matrix: input factor first, built from the entrywise action") {
    const double theta = 0.37, p = 0.2;
    const ChoiPair cp = choi_matrix(ChannelParams(theta, p));
    ComplexMatrix oracle = ComplexMatrix::Zero(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            ComplexMatrix e = ComplexMatrix::Zero(2, 2);
            e(i, j) = 1.0;
            oracle += kron(e, channel_oracle(e, theta, p));
        }
    CHECK((cp.c - oracle).norm() < 1e-14);
    CHECK(std::abs(cp.c.trace() - 2.0) < 1e-14);
    CHECK(std::abs(cp.c(0, 3) - (1.0 - p) * std::polar(1.0, theta)) < 1e-14);
    // Trace preservation: Tr_out C = I_in.
    CHECK((partial_trace(cp.c, 2, 2, Keep::A) - ComplexMatrix::Identity(2, 2)).norm() < 1e-14);

    const double h = 1e-6;
    const ComplexMatrix fd =
        (choi_matrix(ChannelParams(theta + h, p)).c - choi_matrix(ChannelParams(theta - h, p)).c) / (2.0 * h);
    CHECK((cp.d - fd).norm() < 1e-8);
}

TEST_CASE("sequential output agrees with repeated channel application") {
    const double theta = -1.1, p = 0.07;
    ComplexVector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    ComplexMatrix rho = plus * plus.adjoint();
    for (int m = 1; m <= 6; ++m) {
        rho = channel_oracle(rho, theta, p);
        CHECK((sequential_output(ChannelParams(theta, p), m).matrix() - rho).norm() < 1e-13);
    }
}

TEST_CASE("kron, partial trace and permutation are consistent") {
    CounterRng rng(21, 0);
    for (int i = 0; i < 20; ++i) {
        const DensityMatrix a = gen::density(rng, 2), b = gen::density(rng, 3);
        const ComplexMatrix ab = kron(a.matrix(), b.matrix());
        CHECK((partial_trace(ab, 2, 3, Keep::A) - a.matrix()).norm() < 1e-13);
        CHECK((partial_trace(ab, 2, 3, Keep::B) - b.matrix()).norm() < 1e-13);
        CHECK((permute_subsystems(ab, {2, 3}, {1, 0}) - kron(b.matrix(), a.matrix())).norm() < 1e-13);
    }
}

TEST_CASE("Hermitian eigendecomposition reconstructs random matrices") {
    CounterRng rng(31, 0);
    for (int i = 0; i < 30; ++i) {
        const int dim = gen::integer(rng, 1, 8);
        const ComplexMatrix h = gen::hermitian(rng, dim);
        const EigenSystem es = hermitian_eig(h);
        CHECK((es.vectors * es.values.cast<cplx>().asDiagonal() * es.vectors.adjoint() - h).norm() < 1e-10);
        for (int k = 1; k < dim; ++k) CHECK(es.values(k - 1) >= es.values(k));
    }
    ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(require_hermitian(bad, 1e-10, "test"), ValidationError);
}

TEST_CASE("pseudo-inverse acts on the support only") {
    ComplexMatrix m = ComplexMatrix::Zero(3, 3);
    m(0, 0) = 2.0;
    m(1, 1) = 0.5;
    const ComplexMatrix inv = pseudo_inverse_on_support(m, 1e-12);
    CHECK(std::abs(inv(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(inv(1, 1) - 2.0) < 1e-14);
    CHECK(std::abs(inv(2, 2)) < 1e-14);
}

TEST_CASE("quadrature and the tabulated CDF") {
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, pi, 1e-12) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, 1e-14, 3), NumericalError);

    const std::vector<double> grid = linspace(0.0, 1.0, 101);
    std::vector<double> dens(grid.size(), 1.0);
    const DensityCurve curve(grid, dens);
    CHECK(curve.normalization() == doctest::Approx(1.0));
    const TabulatedCdf cdf = TabulatedCdf::from_density(curve);
    CHECK(cdf(0.25) == doctest::Approx(0.25));
    CHECK(cdf(2.0) == doctest::Approx(1.0));
    CHECK(cdf(-1.0) == doctest::Approx(0.0));
}

TEST_CASE("empirical statistics") {
    const EmpiricalSample s({3.0, 1.0, 2.0, 4.0});
    CHECK(s.sorted().front() == 1.0);
    CHECK(quantile(s, 0.5) == doctest::Approx(2.5));
    CHECK(ks_two_sample(s, s) == 0.0);
    CHECK(ks_two_sample(EmpiricalSample({0.0, 1.0}), EmpiricalSample({2.0, 3.0})) == doctest::Approx(1.0));

    const Histogram h = histogram({-2.0, 0.1, 0.2, 0.6, 5.0}, 0.0, 1.0, 2);
    CHECK(h.counts[0] == 2.0);
    CHECK(h.counts[1] == 1.0);
    CHECK(h.below == 1);
    CHECK(h.above == 1);
    CHECK(h.width == doctest::Approx(0.5));
}

TEST_CASE("log-log fit recovers an exact power law") {
    std::vector<std::pair<double, double>> pts;
    for (int k = 4; k <= 12; ++k) {
        const double n = std::ldexp(1.0, k);
        pts.emplace_back(n, 3.0 * std::pow(n, -1.5));
    }
    const ScalingFit fit = scaling_exponent(pts, 2);
    CHECK(fit.exponent == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(fit.prefactor == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.points_used == 7);
    CHECK_THROWS_AS(scaling_exponent({{1, 1}, {2, 2}, {4, 4}}, 0), ValidationError);
}
