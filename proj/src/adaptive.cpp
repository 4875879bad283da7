#include "qpe/adaptive.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "qpe/channel.hpp"
#include "qpe/covariant.hpp"
#include "qpe/errors.hpp"
#include "qpe/parallel.hpp"
#include "qpe/rng.hpp"

namespace qpe {

namespace {

constexpr double pi = std::numbers::pi;
constexpr int max_steps_exponent = 40;
constexpr std::size_t trial_chunk = 8192;

void require_protocol_size(int N) {
    if (N < 0 || N > max_steps_exponent) {
        throw ValidationError("protocol size N must lie in [0, " + std::to_string(max_steps_exponent) + "]");
    }
}

double survival(double p, long m) {
    if (p >= 1.0) return 0.0;
    return std::exp(static_cast<double>(m) * std::log1p(-p));
}

// Channel uses at step k (1-based).
long uses_at_step(int N, int k) { return 1L << (N - k + 1); }

struct StepDraw {
    int bit;
    int shadow;
};

// Three draws per step, always consumed, so streams stay aligned.
StepDraw draw_step(CounterRng& rng, double theta, double p, long m, double feedback) {
    const double s = std::pow(std::sin(0.5 * (static_cast<double>(m) * theta + feedback)), 2);
    const double dephase_u = rng.uniform();
    const double outcome_u = rng.uniform();
    const double coin_u = rng.uniform();
    const int shadow = outcome_u < s ? 1 : 0;
    const bool dephased = dephase_u < 1.0 - survival(p, m);
    return {dephased ? (coin_u < 0.5 ? 1 : 0) : shadow, shadow};
}

ProtocolTranscript run_with(const ProtocolConfig& cfg, CounterRng& rng) {
    ProtocolTranscript tr;
    tr.bits.reserve(static_cast<std::size_t>(cfg.steps()));
    tr.index = 0;
    for (int k = 1; k <= cfg.steps(); ++k) {
        const StepDraw d = draw_step(rng, cfg.theta, cfg.p, uses_at_step(cfg.N, k), step_feedback(tr.bits, k));
        tr.bits.push_back(d.bit);
        tr.shadow.push_back(d.shadow);
        tr.flips.push_back(d.bit ^ d.shadow);
        tr.index += static_cast<long>(d.bit) << (k - 1);
    }
    tr.estimate = static_cast<double>(tr.index) * std::ldexp(pi, -cfg.N);
    return tr;
}

struct FlipPattern {
    std::vector<int> shadow;
    std::vector<int> flips;
    double tau = 0.0;
    double zeta = 0.0;
    long zeta_units = 0; // zeta / (2 pi)
};

FlipPattern draw_flip_pattern(CounterRng& rng, const std::vector<double>& flip_probability, int N) {
    FlipPattern fp;
    for (int k = 1; k <= N + 1; ++k) {
        const int a = rng.uniform() < 0.5 ? 1 : 0;
        const int x = rng.uniform() < flip_probability[static_cast<std::size_t>(k - 1)] ? 1 : 0;
        fp.shadow.push_back(a);
        fp.flips.push_back(x);
        if (x) {
            const long sign = a ? -1 : 1;
            fp.tau += static_cast<double>(sign) * std::ldexp(pi, k - 1 - N);
            fp.zeta_units += sign << (k - 1);
        }
    }
    fp.zeta = 2.0 * pi * static_cast<double>(fp.zeta_units);
    return fp;
}

double fejer_ratio(long M, double z) {
    const double half = std::sin(0.5 * z);
    if (half == 0.0) return 1.0;
    const double top = std::sin(0.5 * static_cast<double>(M) * z);
    return top * top / (static_cast<double>(M) * static_cast<double>(M) * half * half);
}

double sample_z0(CounterRng& rng, long M) {
    const double mf = static_cast<double>(M);
    const double core_share = mf / (2.0 * mf - 1.0);
    for (;;) {
        const double region_u = rng.uniform();
        const double place_u = rng.uniform();
        const double sign_u = rng.uniform();
        const double accept_u = rng.uniform();
        double z;
        double envelope; // min(M^2, pi^2/z^2) / M^2
        if (region_u < core_share) {
            z = (2.0 * place_u - 1.0) * pi / mf;
            envelope = 1.0;
        } else {
            z = pi / (mf - place_u * (mf - 1.0));
            if (sign_u < 0.5) z = -z;
            envelope = pi * pi / (z * z * mf * mf);
        }
        if (accept_u * envelope < fejer_ratio(M, z)) return z;
    }
}

// Integrals keyed by zeta / (2 pi); every trial with the same key shares one quadrature.
MonteCarloEstimate average_over_patterns(double epsilon, int N, std::size_t trials, std::uint64_t seed,
                                         unsigned threads, const std::function<double(long)>& integral) {
    if (trials == 0) throw ValidationError("need at least one trial");
    const std::vector<double> probs = flip_model_limit(epsilon, N);
    std::vector<long> keys(trials);
    parallel_chunks(ChunkPlan{trials, trial_chunk}, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            keys[i] = draw_flip_pattern(rng, probs, N).zeta_units;
        }
    });
    std::map<long, std::size_t> counts;
    for (long key : keys) ++counts[key];
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& [key, count] : counts) {
        const double v = integral(key);
        sum += static_cast<double>(count) * v;
        sum_sq += static_cast<double>(count) * v * v;
    }
    const double n = static_cast<double>(trials);
    const double mean = sum / n;
    const double var = trials > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
    return {mean, std::sqrt(var / n), trials};
}

double sinc_squared(double u) {
    if (std::abs(u) < 1e-4) return 1.0 - u * u / 3.0;
    const double s = std::sin(u) / u;
    return s * s;
}

double sinc_squared_quadrature(double lo, double hi) {
    const auto intervals = static_cast<std::size_t>(std::max(20000.0, 4.0 * (hi - lo)));
    return integrate(sinc_squared, lo, hi, 1e-11, intervals);
}

} // namespace

ProtocolConfig::ProtocolConfig(int N_, double theta_, double p_) : N(N_), theta(reduce_angle(theta_)), p(p_) {
    require_protocol_size(N);
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing probability must lie in [0, 1]");
}

ProtocolConfig ProtocolConfig::from_schedule(int N, double theta, double epsilon) {
    require_protocol_size(N);
    return ProtocolConfig(N, theta, NoiseSchedule(epsilon).p((2L << N) - 1));
}

double step_outcome_probability(double theta, double p, long m, double feedback) {
    if (m < 1) throw ValidationError("a step needs at least one channel use");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing probability must lie in [0, 1]");
    const double r = survival(p, m);
    const double s = std::sin(0.5 * (static_cast<double>(m) * theta + feedback));
    return r * s * s + 0.5 * (1.0 - r);
}

double step_feedback(const std::vector<int>& bits, int k) {
    if (k < 1 || static_cast<std::size_t>(k - 1) > bits.size()) throw ValidationError("step index out of range");
    double phase = 0.0;
    for (int i = 1; i < k; ++i) {
        if (bits[static_cast<std::size_t>(i - 1)]) phase -= std::ldexp(pi, i - k);
    }
    return phase;
}

ProtocolTranscript run_protocol1(const ProtocolConfig& cfg, std::uint64_t seed, std::uint64_t trial) {
    CounterRng rng(seed, trial);
    return run_with(cfg, rng);
}

std::vector<double> protocol1_exhaustive(const ProtocolConfig& cfg) {
    if (cfg.N > 20) throw ValidationError("exhaustive enumeration is limited to N <= 20");
    std::vector<double> out(static_cast<std::size_t>(cfg.outcomes()), 0.0);
    std::vector<int> bits;
    std::function<void(int, double, long)> descend = [&](int k, double prob, long index) {
        if (k > cfg.steps()) {
            out[static_cast<std::size_t>(index)] += prob;
            return;
        }
        const double p1 = step_outcome_probability(cfg.theta, cfg.p, uses_at_step(cfg.N, k), step_feedback(bits, k));
        for (int a = 0; a <= 1; ++a) {
            bits.push_back(a);
            descend(k + 1, prob * (a ? p1 : 1.0 - p1), index + (static_cast<long>(a) << (k - 1)));
            bits.pop_back();
        }
    };
    descend(1, 1.0, 0);
    return out;
}

std::vector<double> protocol3_distribution(double theta, int N) {
    require_protocol_size(N);
    if (N > 24) throw ValidationError("protocol3_distribution is limited to N <= 24");
    const long M = 2L << N;
    std::vector<double> out(static_cast<std::size_t>(M));
    for (long y = 0; y < M; ++y) {
        const double d = theta - static_cast<double>(y) * std::ldexp(pi, -N);
        out[static_cast<std::size_t>(y)] = fejer_ratio(M, d);
    }
    return out;
}

std::vector<double> flip_model(double p, int N) {
    require_protocol_size(N);
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing probability must lie in [0, 1]");
    std::vector<double> out;
    for (int k = 1; k <= N + 1; ++k) out.push_back(0.5 * (1.0 - survival(p, uses_at_step(N, k))));
    return out;
}

std::vector<double> flip_model_limit(double epsilon, int N) {
    require_protocol_size(N);
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
    std::vector<double> out;
    for (int k = 1; k <= N + 1; ++k) out.push_back(-0.5 * std::expm1(-epsilon * std::ldexp(1.0, -k)));
    return out;
}

ErrorDecomposition sample_error_decomposition(double epsilon, int N, std::uint64_t seed, std::uint64_t trial) {
    const std::vector<double> probs = flip_model_limit(epsilon, N);
    CounterRng rng(seed, trial);
    FlipPattern fp = draw_flip_pattern(rng, probs, N);
    const double z0 = sample_z0(rng, 2L << N);
    return {z0, fp.tau, fp.zeta, std::move(fp.shadow), std::move(fp.flips)};
}

MonteCarloEstimate limiting_probability_noisy(double epsilon, double a, double b, int N, std::size_t trials,
                                              std::uint64_t seed, unsigned threads) {
    if (!(a < b)) throw ValidationError("limiting probability needs a < b");
    return average_over_patterns(epsilon, N, trials, seed, threads, [&](long key) {
        const double zeta = 2.0 * pi * static_cast<double>(key);
        return sinc_squared_quadrature(a + zeta, b + zeta) / (2.0 * pi);
    });
}

MonteCarloEstimate limiting_probability_rescaled(double epsilon, double a, double b, int N, std::size_t trials,
                                                 std::uint64_t seed, unsigned threads) {
    if (!(a < b)) throw ValidationError("limiting probability needs a < b");
    return average_over_patterns(epsilon, N, trials, seed, threads, [&](long key) {
        const double zeta = 2.0 * pi * static_cast<double>(key);
        return sinc_squared_quadrature(0.5 * (a - zeta), 0.5 * (b - zeta)) / pi;
    });
}

double fejer_limit_density(double t) { return 0.5 * sinc_squared(0.5 * t) / pi; }

double sinc_squared_integral(double a, double b) {
    auto antiderivative = [](double u) {
        if (u == 0.0) return 0.0;
        const double s = std::sin(u);
        return si_function(2.0 * u) - s * s / u;
    };
    return antiderivative(b) - antiderivative(a);
}

EmpiricalLimit empirical_limiting_distribution(double epsilon, int N, std::size_t trials, std::size_t bins,
                                               double half_width, std::uint64_t seed, unsigned threads) {
    if (trials == 0 || bins == 0) throw ValidationError("need trials and bins");
    if (!(half_width > 0.0)) throw ValidationError("histogram half-width must be positive");
    const ProtocolConfig base = ProtocolConfig::from_schedule(N, 0.0, epsilon);
    const double n = static_cast<double>(base.n());
    EmpiricalLimit out;
    out.samples.resize(trials);
    parallel_chunks(ChunkPlan{trials, trial_chunk}, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            const double theta = -pi + 2.0 * pi * rng.uniform();
            ProtocolConfig cfg = base;
            cfg.theta = reduce_angle(theta);
            const ProtocolTranscript tr = run_with(cfg, rng);
            out.samples[i] = n * reduce_angle(tr.estimate - cfg.theta);
        }
    });
    out.histogram = histogram(out.samples, -half_width, half_width, bins);
    out.density.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out.density[b] = out.histogram.counts[b] / (static_cast<double>(trials) * out.histogram.width);
    }
    return out;
}

MonteCarloEstimate scaled_mean_squared_error(double epsilon, int N, std::size_t trials, std::uint64_t seed,
                                             unsigned threads) {
    if (trials < 2) throw ValidationError("need at least two trials");
    const ProtocolConfig base = ProtocolConfig::from_schedule(N, 0.0, epsilon);
    const double n = static_cast<double>(base.n());
    std::vector<double> sq(trials);
    parallel_chunks(ChunkPlan{trials, trial_chunk}, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            ProtocolConfig cfg = base;
            cfg.theta = reduce_angle(-pi + 2.0 * pi * rng.uniform());
            const double d = reduce_angle(run_with(cfg, rng).estimate - cfg.theta);
            sq[i] = n * d * d;
        }
    });
    double sum = 0.0;
    for (double v : sq) sum += v;
    const double mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (double v : sq) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(trials - 1);
    return {mean, std::sqrt(var / static_cast<double>(trials)), trials};
}

double noiseless_scaled_mse(int N) {
    require_protocol_size(N);
    if (N > 30) throw ValidationError("noiseless_scaled_mse is limited to N <= 30");
    const long M = 2L << N;
    const double mf = static_cast<double>(M);
    // E[Z0^2] = pi^2/3 + (4/M) sum_{d=1}^{M-1} (M-d) (-1)^d / d^2
    double tail = 0.0;
    for (long d = M - 1; d >= 1; --d) {
        const double term = (mf - static_cast<double>(d)) / (static_cast<double>(d) * static_cast<double>(d));
        tail += d % 2 == 0 ? term : -term;
    }
    return (mf - 1.0) * (pi * pi / 3.0 + 4.0 * tail / mf);
}

double average_error_asymptote(double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
    return epsilon * pi * pi + si_function(2.0 * pi) / pi;
}

} // namespace qpe
