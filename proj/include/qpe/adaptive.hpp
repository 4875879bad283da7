#pragma once

#include <cstdint>
#include <vector>

#include "qpe/stats.hpp"

namespace qpe {

//! Protocol 1 with N+1 steps; step k applies the channel 2^{N-k+1} times.
struct ProtocolConfig {
    ProtocolConfig(int N, double theta, double p);
    //! p = epsilon / n with n = 2^{N+1} - 1.
    static ProtocolConfig from_schedule(int N, double theta, double epsilon);

    long n() const { return (2L << N) - 1; }
    int steps() const { return N + 1; }
    //! 2^{N+1}: number of distinct estimates.
    long outcomes() const { return 2L << N; }

    int N;
    double theta; //!< in (-pi, pi]
    double p;
};

struct ProtocolTranscript {
    std::vector<int> bits;   //!< A_1..A_{N+1}
    std::vector<int> shadow; //!< noiseless outcome under the same feedback and randomness
    std::vector<int> flips;  //!< A_k xor shadow_k
    long index;              //!< sum_k A_k 2^{k-1}
    double estimate;         //!< index * 2^{-N} pi, in [0, 2 pi)
};

//! (1-p)^m sin^2((m theta + feedback)/2) + (1 - (1-p)^m)/2.
double step_outcome_probability(double theta, double p, long m, double feedback);

//! -sum_{i<k} A_i 2^{i-k} pi for step k (1-based) given the earlier bits.
double step_feedback(const std::vector<int>& bits, int k);

//! One run; the draws come from the counter stream (seed, trial).
ProtocolTranscript run_protocol1(const ProtocolConfig& cfg, std::uint64_t seed, std::uint64_t trial);

//! Probability of every estimate index, by summing all 2^{N+1} outcome paths.
std::vector<double> protocol1_exhaustive(const ProtocolConfig& cfg);

//! Noiseless outcome distribution of the covariant measurement on eta_uni
//! with M = 2^{N+1} outcomes y 2 pi / M: the Fejer weights
//! sin^2(M d/2) / (M^2 sin^2(d/2)), d = theta - y 2 pi / M.
std::vector<double> protocol3_distribution(double theta, int N);

//! P(X_k = 1) = (1 - (1-p)^{2^{N-k+1}}) / 2, k = 1..N+1.
std::vector<double> flip_model(double p, int N);

//! P(X_k = 1) = (1 - e^{-epsilon 2^{-k}}) / 2, k = 1..N+1.
std::vector<double> flip_model_limit(double epsilon, int N);

struct ErrorDecomposition {
    double z0;   //!< Fejer-distributed noiseless error theta - estimate, radians
    double tau;  //!< sum_k (-1)^{A_k} X_k 2^{k-1-N} pi, radians
    double zeta; //!< sum_k (-1)^{A_k} 2^k X_k pi
    std::vector<int> shadow;
    std::vector<int> flips;
};

//! Draws Z0 by rejection from min(M^2, pi^2/z^2)/(2 pi M), uniform shadow
//! bits, and flips from the limit model.
ErrorDecomposition sample_error_decomposition(double epsilon, int N, std::uint64_t seed, std::uint64_t trial);

struct MonteCarloEstimate {
    double value;
    double standard_error;
    std::size_t trials;
};

//! E over (shadow, flips) of int_a^b sin^2 y / (y + zeta)^2 dy / 2pi, as
//! printed. zeta lies in 2 pi Z so the integrand equals sin^2(u)/u^2 at
//! u = y + zeta and has no pole.
MonteCarloEstimate limiting_probability_noisy(double epsilon, double a, double b, int N, std::size_t trials,
                                              std::uint64_t seed, unsigned threads = 1);

//! The same expectation for t = n(estimate - theta) with the limit density
//! (2/pi) sin^2((t - zeta)/2) / (t - zeta)^2, which has unit mass.
MonteCarloEstimate limiting_probability_rescaled(double epsilon, double a, double b, int N, std::size_t trials,
                                                 std::uint64_t seed, unsigned threads = 1);

//! (2/pi) sin^2(t/2) / t^2, the noiseless limit density of n(estimate - theta).
double fejer_limit_density(double t);

//! int_a^b sin^2 u / u^2 du by its antiderivative Si(2u) - sin^2(u)/u.
double sinc_squared_integral(double a, double b);

struct EmpiricalLimit {
    std::vector<double> samples; //!< n * reduce(estimate - theta), theta uniform per trial
    Histogram histogram;
    std::vector<double> density; //!< counts / (trials * width)
};

EmpiricalLimit empirical_limiting_distribution(double epsilon, int N, std::size_t trials, std::size_t bins,
                                               double half_width, std::uint64_t seed, unsigned threads = 1);

//! Monte Carlo n E[(estimate - theta)^2] under p = epsilon/n, theta uniform.
MonteCarloEstimate scaled_mean_squared_error(double epsilon, int N, std::size_t trials, std::uint64_t seed,
                                             unsigned threads = 1);

//! Exact noiseless n E[Z0^2] from the Fourier series of the Fejer density.
double noiseless_scaled_mse(int N);

//! epsilon pi^2 + Si(2 pi)/pi.
double average_error_asymptote(double epsilon);

} // namespace qpe
