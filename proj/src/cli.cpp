#include "qpe/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "qpe/adaptive.hpp"
#include "qpe/channel.hpp"
#include "qpe/covariant.hpp"
#include "qpe/errors.hpp"
#include "qpe/noisy_covariant.hpp"
#include "qpe/parallel.hpp"
#include "qpe/qfi.hpp"
#include "qpe/rng.hpp"
#include "qpe/stats.hpp"
#include "qpe/tolerances.hpp"

namespace qpe::cli {

namespace {

using json = nlohmann::json;
constexpr double pi = std::numbers::pi;

enum class Kind { Int, Real, Text };

struct Param {
    std::string name;
    Kind kind;
    json fallback;
    std::string help;
    bool output_path = false; // where to write, not what to compute: kept out of the descriptor
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct Outcome {
    json summary = json::object();
    Table table;
    std::string violation; // nonempty: numerical contract broken, artifact flagged
};

struct Context {
    unsigned threads;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Param> params;
    std::function<Outcome(const json&, const Context&)> body;
};

// ── Parameter access ──

long long as_int(const json& params, const std::string& name) { return params.at(name).get<long long>(); }
double as_real(const json& params, const std::string& name) { return params.at(name).get<double>(); }
std::string as_text(const json& params, const std::string& name) { return params.at(name).get<std::string>(); }

int as_positive_int(const json& params, const std::string& name, long long lo, long long hi) {
    const long long v = as_int(params, name);
    if (v < lo || v > hi) {
        throw ValidationError(name + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
}

json convert(const Param& p, const json& raw, const std::string& origin) {
    auto fail = [&]() -> json {
        throw ValidationError(origin + " value for '" + p.name + "' has the wrong type: " + raw.dump());
    };
    switch (p.kind) {
    case Kind::Int:
        if (raw.is_number_integer()) return raw;
        if (raw.is_number_float() && std::floor(raw.get<double>()) == raw.get<double>()) {
            return static_cast<long long>(raw.get<double>());
        }
        if (raw.is_string()) {
            const std::string s = raw.get<std::string>();
            std::size_t used = 0;
            long long v = 0;
            try {
                v = std::stoll(s, &used);
            } catch (const std::exception&) {
                return fail();
            }
            if (used != s.size()) return fail();
            return v;
        }
        return fail();
    case Kind::Real:
        if (raw.is_number()) return raw.get<double>();
        if (raw.is_string()) {
            const std::string s = raw.get<std::string>();
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                return fail();
            }
            if (used != s.size() || !std::isfinite(v)) return fail();
            return v;
        }
        return fail();
    case Kind::Text:
        if (raw.is_string()) return raw;
        return fail();
    }
    return fail();
}

// ── Shared parsing ──

ProfileFunction parse_profile(const std::string& text) {
    if (text == "uniform") return ProfileFunction::uniform();
    if (text == "sine") return ProfileFunction::sine(1);
    if (text.rfind("sine:", 0) == 0) {
        std::size_t used = 0;
        int mode = 0;
        try {
            mode = std::stoi(text.substr(5), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size() - 5) throw ValidationError("bad sine mode in profile '" + text + "'");
        return ProfileFunction::sine(mode);
    }
    if (text.rfind("file:", 0) == 0) return ProfileFunction::load(text.substr(5));
    throw ValidationError("unknown profile '" + text + "' (expected uniform, sine, sine:K or file:PATH)");
}

BranchModel parse_model(const std::string& s) {
    if (s == "corrected") return BranchModel::Corrected;
    if (s == "printed") return BranchModel::Printed;
    throw ValidationError("unknown branch model '" + s + "' (expected corrected or printed)");
}

json rld_json(const RldValue& v) { return v.is_unbounded() ? json("unbounded") : json(v.value()); }

std::vector<double> symmetric_grid(double half_width, double step) {
    if (!(half_width > 0.0) || !(step > 0.0)) throw ValidationError("grid needs positive half-width and step");
    const auto count = static_cast<std::size_t>(std::llround(2.0 * half_width / step)) + 1;
    if (count > 2'000'000) throw ValidationError("grid has too many points");
    return linspace(-half_width, half_width, std::max<std::size_t>(count, 3));
}

double mass_outside(const std::vector<double>& samples, double bound) {
    std::size_t count = 0;
    for (double v : samples) count += std::abs(v) > bound ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(samples.size());
}

// ── Commands ──

Outcome run_qfi(const json& prm, const Context&) {
    const double p = as_real(prm, "p");
    const ChannelParams cp(as_real(prm, "theta"), p);
    const int n = as_positive_int(prm, "n", 1, 4096);
    Outcome o;
    o.summary["rld_closed"] = rld_json(rld_channel_qfi_closed(p));
    const RldValue single = rld_channel_qfi_numeric(cp);
    o.summary["rld_numeric"] = rld_json(single);
    const ChoiPair two = two_use_choi(cp);
    const RldValue pair = rld_from_choi(two.c, two.d, 4, 4);
    o.summary["rld_two_use_numeric"] = rld_json(pair);
    if (!single.is_unbounded() && !pair.is_unbounded() && single.value() > 0.0) {
        o.summary["rld_two_use_ratio"] = pair.value() / single.value();
    }
    o.summary["sld_ghz_closed"] = ghz_sld_qfi(p, n);
    o.summary["sld_sequential_closed"] = sequential_sld_qfi(p, n);
    if (n <= 4096) {
        o.summary["sld_ghz_numeric"] = sld_qfi(ghz_family_point(cp, n));
        o.summary["sld_sequential_numeric"] = sld_qfi(sequential_family_point(cp, n));
    }
    o.summary["rld_n_use_bound"] = rld_json(n_use_rld_bound(p, n));
    return o;
}

Outcome run_covariant(const json& prm, const Context&) {
    const ProfileFunction f = parse_profile(as_text(prm, "profile"));
    const int n = as_positive_int(prm, "n", 1, 1 << 20);
    const ErrorKernel kernel = parse_kernel(as_text(prm, "kernel"));
    Outcome o;
    o.summary["profile"] = f.describe();
    o.summary["min_error"] = optimal_state(n).min_error;
    if (n <= 2000) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(error_kernel_matrix(n, kernel), Eigen::EigenvaluesOnly);
        o.summary["kernel_min_eigenvalue"] = es.eigenvalues()(0);
    }
    if (kernel == ErrorKernel::HalfAngle) o.summary["half_angle_minimum"] = half_angle_minimum(n).min_error;
    const ProfileSpectrum ps = spectrum_from_profile(f, n);
    const double exact = average_error_exact(ps.spectrum, kernel);
    o.summary["profile_error_exact"] = exact;
    o.summary["profile_error_quadratic"] = error_quadratic_form(ps.spectrum, kernel);
    o.summary["n_times_error"] = n * exact;
    o.summary["n2_times_error"] = static_cast<double>(n) * n * exact;
    const bool dirichlet = f.is_dirichlet(tol::dirichlet);
    o.summary["dirichlet"] = dirichlet;
    if (dirichlet) {
        o.summary["n2_error_asymptote"] =
            dirichlet_error_asymptote(f) * (kernel == ErrorKernel::HalfAngle ? 0.25 : 1.0);
    }
    const APlusMinus apm = a_plus_minus(f);
    o.summary["a_plus"] = apm.plus;
    o.summary["a_minus"] = apm.minus;
    o.summary["a_plus_at_double_r1"] = apm.plus_at_double_r1;
    // The same averages under the transform normalization that halves F f.
    o.summary["a_plus_quarter_normalization"] = apm.plus / 4.0;
    const double t_max = as_real(prm, "t-max");
    const int t_points = as_positive_int(prm, "t-points", 3, 1 << 22);
    if (!(t_max > 0.0)) throw ValidationError("t-max must be positive");
    const FourierDensity fd = fourier_density(f, linspace(-t_max, t_max, static_cast<std::size_t>(t_points)));
    o.summary["fourier_window_mass"] = fd.parseval_mass;
    o.summary["parseval_ok"] = fd.parseval_ok;
    o.table.columns = {"x", "density"};
    for (std::size_t i = 0; i < fd.curve.size(); ++i) o.table.rows.push_back({fd.curve.grid()[i], fd.curve.density()[i]});
    if (!fd.parseval_ok) o.violation = "Parseval window too narrow: mass " + std::to_string(fd.parseval_mass);
    return o;
}

Outcome run_noisy_covariant(const json& prm, const Context& ctx) {
    const ProfileFunction f = parse_profile(as_text(prm, "profile"));
    const double eps = as_real(prm, "epsilon");
    const int n = as_positive_int(prm, "n", 1, 1 << 20);
    const ErrorKernel kernel = parse_kernel(as_text(prm, "kernel"));
    const BranchModel model = parse_model(as_text(prm, "model"));
    const int intervals = as_positive_int(prm, "intervals", 8, 1 << 16);
    const KMixture mix = KMixture::poisson(eps);
    const NoisyAverageError err = noisy_average_error(f, mix, n, kernel, model, 4096, ctx.threads);
    const NoisyAverageError binom =
        noisy_average_error(f, KMixture::binomial(n, NoiseSchedule(eps).p(n)), n, kernel, model, 4096, ctx.threads);
    Outcome o;
    o.summary["profile"] = f.describe();
    o.summary["k_max"] = mix.k_max();
    o.summary["mixture_mass"] = mix.mass();
    o.summary["asymptotic"] = err.asymptotic ? json(*err.asymptotic) : json(nullptr);
    o.summary["finite_n_poisson"] = err.finite_n;
    o.summary["finite_n_binomial"] = binom.finite_n;
    o.summary["branch_mass"] = err.branch_mass;
    o.summary["noiseless_error"] = average_error_exact(spectrum_from_profile(f, n).spectrum, kernel);
    const NoisyDensity nd = noisy_limiting_density(f, mix, symmetric_grid(as_real(prm, "t-max"), as_real(prm, "t-step")),
                                                   model, static_cast<std::size_t>(intervals), ctx.threads);
    o.summary["density_window_mass"] = nd.mass;
    o.summary["density_weight_mass"] = nd.weight_mass;
    o.table.columns = {"x", "density"};
    for (std::size_t i = 0; i < nd.curve.size(); ++i) o.table.rows.push_back({nd.curve.grid()[i], nd.curve.density()[i]});
    if (std::abs(nd.mass - nd.weight_mass) > tol::noisy_window_mass) {
        o.violation = "Parseval window too narrow: window mass " + std::to_string(nd.mass) + " vs branch mass " +
                      std::to_string(nd.weight_mass);
    }
    return o;
}

Outcome run_adaptive(const json& prm, const Context& ctx) {
    const double eps = as_real(prm, "epsilon");
    const int N = as_positive_int(prm, "N", 0, 30);
    const std::string grid = as_text(prm, "theta-grid");
    if (grid != "on-grid" && grid != "off-grid" && grid != "uniform") {
        throw ValidationError("theta-grid must be on-grid, off-grid or uniform");
    }
    const auto trials = static_cast<std::size_t>(as_positive_int(prm, "trials", 1, 100'000'000));
    const auto seed = static_cast<std::uint64_t>(as_int(prm, "seed"));
    const std::string transcripts = as_text(prm, "transcripts");
    const ProtocolConfig base = ProtocolConfig::from_schedule(N, 0.0, eps);
    const long M = base.outcomes();
    const double spacing = std::ldexp(pi, -N);
    const double n = static_cast<double>(base.n());

    auto theta_of = [&](std::size_t i) {
        if (grid == "on-grid") return static_cast<double>(static_cast<long>(i % static_cast<std::size_t>(M))) * spacing;
        if (grid == "off-grid") {
            return (static_cast<double>(static_cast<long>(i % static_cast<std::size_t>(M))) + 0.5) * spacing;
        }
        CounterRng rng(seed ^ 0x9E3779B97F4A7C15ull, i);
        return -pi + 2.0 * pi * rng.uniform();
    };

    struct Partial {
        std::size_t exact = 0;
        std::vector<std::size_t> flips;
        double sq = 0.0, sq2 = 0.0;
    };
    const ChunkPlan plan{trials, 4096};
    std::vector<Partial> partials(plan.chunks());
    std::vector<ProtocolTranscript> kept(transcripts.empty() ? 0 : trials);
    std::vector<double> thetas(transcripts.empty() ? 0 : trials);
    parallel_chunks(plan, ctx.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Partial part;
        part.flips.assign(static_cast<std::size_t>(N + 1), 0);
        for (std::size_t i = begin; i < end; ++i) {
            ProtocolConfig cfg = base;
            cfg.theta = reduce_angle(theta_of(i));
            ProtocolTranscript tr = run_protocol1(cfg, seed, i);
            const double d = reduce_angle(tr.estimate - cfg.theta);
            part.exact += std::abs(d) < 1e-9 ? 1 : 0;
            for (int k = 0; k <= N; ++k) part.flips[static_cast<std::size_t>(k)] += tr.flips[static_cast<std::size_t>(k)];
            part.sq += n * d * d;
            part.sq2 += (n * d * d) * (n * d * d);
            if (!kept.empty()) {
                thetas[i] = cfg.theta;
                kept[i] = std::move(tr);
            }
        }
        partials[chunk] = std::move(part);
    });
    std::size_t exact = 0;
    std::vector<double> flip_rate(static_cast<std::size_t>(N + 1), 0.0);
    double sq = 0.0, sq2 = 0.0;
    for (const Partial& part : partials) {
        exact += part.exact;
        for (int k = 0; k <= N; ++k) flip_rate[static_cast<std::size_t>(k)] += static_cast<double>(part.flips[static_cast<std::size_t>(k)]);
        sq += part.sq;
        sq2 += part.sq2;
    }
    const double t = static_cast<double>(trials);
    for (double& r : flip_rate) r /= t;
    const double mean = sq / t;
    Outcome o;
    o.summary["n"] = base.n();
    o.summary["p"] = base.p;
    o.summary["exact_recovery_rate"] = static_cast<double>(exact) / t;
    o.summary["flip_rate"] = flip_rate;
    o.summary["flip_model"] = flip_model(base.p, N);
    o.summary["scaled_mse"] = mean;
    o.summary["scaled_mse_stderr"] = trials > 1 ? std::sqrt(std::max(0.0, sq2 / t - mean * mean) / (t - 1.0)) : 0.0;
    o.summary["average_error_asymptote"] = average_error_asymptote(eps);
    if (!transcripts.empty()) {
        std::ofstream out(transcripts, std::ios::trunc);
        if (!out) throw ValidationError("cannot write transcripts to '" + transcripts + "'");
        out << std::setprecision(17) << "trial,theta,estimate,bits,flips\n";
        for (std::size_t i = 0; i < trials; ++i) {
            std::string bits, flips;
            for (int b : kept[i].bits) bits += static_cast<char>('0' + b);
            for (int x : kept[i].flips) flips += static_cast<char>('0' + x);
            out << i << ',' << thetas[i] << ',' << kept[i].estimate << ',' << bits << ',' << flips << '\n';
        }
    }
    return o;
}

Outcome run_limit_dist(const json& prm, const Context& ctx) {
    const double eps = as_real(prm, "epsilon");
    const int N = as_positive_int(prm, "N", 0, 30);
    const auto trials = static_cast<std::size_t>(as_positive_int(prm, "trials", 2, 100'000'000));
    const auto bins = static_cast<std::size_t>(as_positive_int(prm, "bins", 1, 1'000'000));
    const double hw = as_real(prm, "half-width");
    const EmpiricalLimit el =
        empirical_limiting_distribution(eps, N, trials, bins, hw, static_cast<std::uint64_t>(as_int(prm, "seed")), ctx.threads);
    const EmpiricalSample sample(el.samples);
    Outcome o;
    o.summary["n"] = (2L << N) - 1;
    o.summary["median"] = quantile(sample, 0.5);
    o.summary["iqr"] = quantile(sample, 0.75) - quantile(sample, 0.25);
    o.summary["mass_in_window"] =
        static_cast<double>(trials - el.histogram.below - el.histogram.above) / static_cast<double>(trials);
    o.summary["tail_mass_beyond_2pi"] = mass_outside(el.samples, 2.0 * pi);
    o.table.columns = {"x", "density", "stderr"};
    const double scale = static_cast<double>(trials) * el.histogram.width;
    for (std::size_t b = 0; b < bins; ++b) {
        o.table.rows.push_back({el.histogram.centers[b], el.density[b], std::sqrt(el.histogram.counts[b]) / scale});
    }
    return o;
}

Outcome run_scaling(const json& prm, const Context& ctx) {
    const std::string quantity = as_text(prm, "quantity");
    const long long n_min = as_int(prm, "n-min"), n_max = as_int(prm, "n-max");
    if (n_min < 1 || n_max < n_min || n_max > (1LL << 24)) throw ValidationError("need 1 <= n-min <= n-max <= 2^24");
    const auto skip = static_cast<std::size_t>(as_positive_int(prm, "skip", 0, 64));
    std::vector<std::pair<double, double>> points;
    std::function<double(long long)> value;
    if (quantity == "covariant-error" || quantity == "noisy-error") {
        const ProfileFunction f = parse_profile(as_text(prm, "profile"));
        const ErrorKernel kernel = parse_kernel(as_text(prm, "kernel"));
        if (quantity == "covariant-error") {
            value = [f, kernel](long long n) {
                return average_error_exact(spectrum_from_profile(f, static_cast<int>(n)).spectrum, kernel);
            };
        } else {
            const KMixture mix = KMixture::poisson(as_real(prm, "epsilon"));
            value = [f, kernel, mix, &ctx](long long n) {
                return noisy_average_error(f, mix, static_cast<int>(n), kernel, BranchModel::Corrected, 1024, ctx.threads)
                    .finite_n;
            };
        }
    } else if (quantity == "rld-bound") {
        const std::string noise = as_text(prm, "noise");
        if (noise != "schedule" && noise != "constant") throw ValidationError("noise must be schedule or constant");
        const double eps = as_real(prm, "epsilon"), p = as_real(prm, "p");
        value = [noise, eps, p](long long n) {
            const double pn = noise == "schedule" ? NoiseSchedule(eps).p(n) : p;
            return n_use_rld_bound(pn, static_cast<long>(n)).value();
        };
    } else {
        throw ValidationError("quantity must be covariant-error, noisy-error or rld-bound");
    }
    Outcome o;
    o.table.columns = {"n", "value"};
    for (long long n = n_min; n <= n_max; n *= 2) {
        const double v = value(n);
        points.emplace_back(static_cast<double>(n), v);
        o.table.rows.push_back({static_cast<double>(n), v});
    }
    const ScalingFit fit = scaling_exponent(points, skip);
    o.summary["exponent"] = fit.exponent;
    o.summary["prefactor"] = fit.prefactor;
    o.summary["r_squared"] = fit.r_squared;
    o.summary["points_used"] = fit.points_used;
    return o;
}

Outcome run_fig_limit_dist(const json& prm, const Context& ctx) {
    const int N = as_positive_int(prm, "N", 0, 30);
    const auto trials = static_cast<std::size_t>(as_positive_int(prm, "trials", 2, 100'000'000));
    const auto bins = static_cast<std::size_t>(as_positive_int(prm, "bins", 1, 1'000'000));
    const double hw = as_real(prm, "half-width");
    const auto seed = static_cast<std::uint64_t>(as_int(prm, "seed"));
    const EmpiricalLimit e0 = empirical_limiting_distribution(0.0, N, trials, bins, hw, seed, ctx.threads);
    const EmpiricalLimit e1 = empirical_limiting_distribution(1.0, N, trials, bins, hw, seed, ctx.threads);
    Outcome o;
    o.summary["tail_mass_beyond_2pi_eps0"] = mass_outside(e0.samples, 2.0 * pi);
    o.summary["tail_mass_beyond_2pi_eps1"] = mass_outside(e1.samples, 2.0 * pi);
    o.summary["ks_eps0_eps1"] = ks_two_sample(EmpiricalSample(e0.samples), EmpiricalSample(e1.samples));
    o.table.columns = {"x", "density_eps0", "density_eps1"};
    for (std::size_t b = 0; b < bins; ++b) o.table.rows.push_back({e0.histogram.centers[b], e0.density[b], e1.density[b]});
    return o;
}

std::vector<Command> commands() {
    const Param seed{"seed", Kind::Int, 0, "RNG seed"};
    const Param profile{"profile", Kind::Text, "sine", "uniform | sine | sine:K | file:PATH"};
    const Param kernel{"kernel", Kind::Text, "half-angle", "half-angle | full-angle"};
    const double window = 12.0 * pi;
    return {
        {"qfi", "RLD and SLD information of the dephased phase channel",
         {{"p", Kind::Real, 0.5, "dephasing probability"}, {"theta", Kind::Real, 0.0, "phase"},
          {"n", Kind::Int, 1, "uses for the SLD families"}, seed},
         run_qfi},
        {"covariant", "noiseless covariant estimator for a spectrum profile",
         {profile, {"n", Kind::Int, 10, "spectrum size"}, kernel,
          {"t-max", Kind::Real, 200.0, "Fourier window half-width"}, {"t-points", Kind::Int, 65536, "Fourier grid points"},
          seed},
         run_covariant},
        {"noisy-covariant", "covariant estimator under p = epsilon/n dephasing",
         {profile, {"epsilon", Kind::Real, 1.0, "noise strength"}, {"n", Kind::Int, 256, "spectrum size"}, kernel,
          {"model", Kind::Text, "corrected", "corrected | printed"},
          {"t-max", Kind::Real, 400.0, "Fourier window half-width"}, {"t-step", Kind::Real, 0.25, "Fourier grid step"},
          {"intervals", Kind::Int, 512, "profile sampling intervals"}, seed},
         run_noisy_covariant},
        {"adaptive", "one-qubit adaptive protocol runs",
         {{"epsilon", Kind::Real, 0.0, "noise strength"}, {"N", Kind::Int, 4, "steps minus one"},
          {"theta-grid", Kind::Text, "uniform", "on-grid | off-grid | uniform"},
          {"trials", Kind::Int, 1000, "number of runs"}, {"transcripts", Kind::Text, "", "CSV path for transcripts", true},
          seed},
         run_adaptive},
        {"limit-dist", "empirical distribution of n(estimate - theta)",
         {{"epsilon", Kind::Real, 1.0, "noise strength"}, {"N", Kind::Int, 12, "steps minus one"},
          {"trials", Kind::Int, 100000, "number of runs"}, {"bins", Kind::Int, 200, "histogram bins"},
          {"half-width", Kind::Real, window, "histogram half-width"}, seed},
         run_limit_dist},
        {"scaling", "error or bound against n over doubling n",
         {{"quantity", Kind::Text, "covariant-error", "covariant-error | noisy-error | rld-bound"}, profile, kernel,
          {"epsilon", Kind::Real, 1.0, "noise strength"}, {"p", Kind::Real, 0.1, "constant dephasing probability"},
          {"noise", Kind::Text, "schedule", "schedule | constant (rld-bound)"},
          {"n-min", Kind::Int, 16, "smallest n"}, {"n-max", Kind::Int, 4096, "largest n"},
          {"skip", Kind::Int, 2, "smallest n values excluded from the fit"}, seed},
         run_scaling},
        {"fig-limit-dist", "noiseless and epsilon = 1 limit densities side by side",
         {{"N", Kind::Int, 12, "steps minus one"}, {"trials", Kind::Int, 100000, "number of runs"},
          {"bins", Kind::Int, 200, "histogram bins"}, {"half-width", Kind::Real, window, "histogram half-width"}, seed},
         run_fig_limit_dist},
    };
}

// ── Output ──

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

void write_csv(const std::string& path, const json& envelope, const Table& table) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write output '" + path + "'");
    out << "# qpe-cli " << version << '\n';
    out << "# descriptor " << envelope.at("descriptor").dump() << '\n';
    out << "# hash " << envelope.at("hash").get<std::string>() << '\n';
    out << "# status " << envelope.at("status").get<std::string>() << '\n';
    out << "# summary " << envelope.at("result").dump() << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n' << std::setprecision(17);
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

void write_json(const std::string& path, const json& envelope) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write output '" + path + "'");
    out << envelope.dump(2) << '\n';
}

int report(std::ostream& err, int code, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    return code;
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const std::vector<Command> table = commands();
    CLI::App app{"Global phase-estimation experiments", "qpe_cli"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));

    struct Bound {
        const Command* command;
        CLI::App* sub;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
        std::string config, out_path;
        unsigned threads = 0;
    };
    std::vector<Bound> bound(table.size());
    for (std::size_t c = 0; c < table.size(); ++c) {
        Bound& b = bound[c];
        b.command = &table[c];
        b.sub = app.add_subcommand(table[c].name, table[c].help);
        for (const Param& p : table[c].params) {
            b.options[p.name] = b.sub->add_option("--" + p.name, b.values[p.name], p.help + " (default " + p.fallback.dump() + ")");
        }
        b.sub->add_option("--config", b.config, "JSON file of parameters; flags override it");
        b.sub->add_option("--out", b.out_path, "artifact path (CSV for tables, JSON otherwise)");
        b.sub->add_option("--threads", b.threads, "worker threads, 0 = all (does not affect results)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return report(err, exit_validation, "validation", e.what());
    }

    const Bound* chosen = nullptr;
    for (const Bound& b : bound) {
        if (b.sub->parsed()) chosen = &b;
    }
    if (chosen == nullptr) return report(err, exit_validation, "validation", "no subcommand given");
    const Command& cmd = *chosen->command;

    json envelope;
    std::string stage = "validation";
    try {
        json params = json::object();
        for (const Param& p : cmd.params) params[p.name] = p.fallback;
        if (!chosen->config.empty()) {
            std::ifstream in(chosen->config);
            if (!in) throw ValidationError("cannot open config '" + chosen->config + "'");
            json cfg;
            try {
                cfg = json::parse(in);
            } catch (const json::exception& e) {
                throw ValidationError(std::string("config is not valid JSON: ") + e.what());
            }
            if (!cfg.is_object()) throw ValidationError("config must be a JSON object");
            for (const auto& [key, value] : cfg.items()) {
                if (key == "command") {
                    if (value != cmd.name) throw ValidationError("config is for command " + value.dump());
                    continue;
                }
                const auto it = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& p) { return p.name == key; });
                if (it == cmd.params.end()) throw ValidationError("unknown config key '" + key + "' for " + cmd.name);
                params[key] = convert(*it, value, "config");
            }
        }
        for (const Param& p : cmd.params) {
            if (chosen->options.at(p.name)->count() > 0) params[p.name] = convert(p, json(chosen->values.at(p.name)), "flag");
        }
        if (as_int(params, "seed") < 0) throw ValidationError("seed must be nonnegative");

        json hashed = params;
        for (const Param& p : cmd.params) {
            if (p.output_path) hashed.erase(p.name);
        }
        const json descriptor{{"command", cmd.name}, {"parameters", hashed}};
        envelope["version"] = version;
        envelope["descriptor"] = descriptor;
        envelope["hash"] = "fnv1a64:" + hex64(fnv1a64(descriptor.dump()));

        stage = "numerical";
        const Context ctx{resolve_threads(chosen->threads)};
        Outcome o = cmd.body(params, ctx);
        envelope["status"] = o.violation.empty() ? "ok" : "numerical-contract-violation";
        envelope["result"] = o.summary;
        if (!o.violation.empty()) envelope["violation"] = o.violation;
        if (!chosen->out_path.empty()) {
            if (o.table.columns.empty()) {
                write_json(chosen->out_path, envelope);
            } else {
                write_csv(chosen->out_path, envelope, o.table);
            }
        }
        out << envelope.dump() << '\n';
        if (!o.violation.empty()) return report(err, exit_numerical, "numerical", o.violation);
        return exit_ok;
    } catch (const ValidationError& e) {
        return report(err, exit_validation, "validation", e.what());
    } catch (const NumericalError& e) {
        return report(err, exit_numerical, "numerical", e.what());
    } catch (const json::exception& e) {
        return report(err, exit_validation, "validation", e.what());
    } catch (const std::invalid_argument& e) {
        return report(err, exit_validation, "validation", e.what());
    } catch (const std::exception& e) {
        return report(err, stage == "validation" ? exit_validation : exit_numerical, stage, e.what());
    }
}

} // namespace qpe::cli
