#include "qpe/noisy_covariant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qpe/errors.hpp"
#include "qpe/parallel.hpp"
#include "qpe/stats.hpp"
#include "qpe/tolerances.hpp"

namespace qpe {

BranchIndex::BranchIndex(int k_, int ell_, int t_) : k(k_), ell(ell_), t(t_) {
    if (k < 0 || ell < 0 || ell > k || t < 0 || t > k) {
        std::ostringstream msg;
        msg << "invalid branch (k, ell, t) = (" << k << ", " << ell << ", " << t << ")";
        throw ValidationError(msg.str());
    }
}

// ── Polynomials ──

Polynomial Polynomial::one() {
    Polynomial p;
    p.add(1.0, 0, 0);
    return p;
}

void Polynomial::add(double coef, int x_power, int complement_power) {
    if (coef == 0.0) return;
    for (Term& term : terms_) {
        if (term.x_power == x_power && term.complement_power == complement_power) {
            term.coef += coef;
            return;
        }
    }
    terms_.push_back({coef, x_power, complement_power});
}

double Polynomial::operator()(double x) const {
    double sum = 0.0;
    for (const Term& term : terms_) {
        sum += term.coef * std::pow(x, term.x_power) * std::pow(1.0 - x, term.complement_power);
    }
    return sum;
}

bool Polynomial::is_one() const {
    return terms_.size() == 1 && terms_[0].coef == 1.0 && terms_[0].x_power == 0 && terms_[0].complement_power == 0;
}

std::vector<double> Polynomial::monomial_coefficients() const {
    int degree = 0;
    for (const Term& term : terms_) degree = std::max(degree, term.x_power + term.complement_power);
    std::vector<double> out(static_cast<std::size_t>(degree) + 1, 0.0);
    for (const Term& term : terms_) {
        for (int i = 0; i <= term.complement_power; ++i) {
            const double sign = i % 2 == 0 ? 1.0 : -1.0;
            out[static_cast<std::size_t>(term.x_power + i)] += term.coef * sign * binomial(term.complement_power, i);
        }
    }
    while (out.size() > 1 && out.back() == 0.0) out.pop_back();
    return out;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return n <= 60 ? std::round(out) : out;
}

double b_coefficient(int n, int m, int k, int ell) {
    if (n < 0 || m < 0 || m > n || ell < 0 || ell > k || k > n) {
        std::ostringstream msg;
        msg << "b_coefficient index out of range: n=" << n << " m=" << m << " k=" << k << " ell=" << ell;
        throw ValidationError(msg.str());
    }
    if (m < ell || n - m < k - ell) return 0.0;
    double ratio = 1.0;
    for (int i = 0; i < ell; ++i) ratio *= static_cast<double>(m - i) / (n - i);
    for (int i = 0; i < k - ell; ++i) ratio *= static_cast<double>(n - m - i) / (n - ell - i);
    return std::sqrt(ratio);
}

Polynomial t_operator_polynomial(const BranchIndex& idx) {
    const int k = idx.k, ell = idx.ell, t = idx.t;
    Polynomial q;
    for (int u = std::max(0, t - k + ell); u <= std::min(t, ell); ++u) {
        q.add(binomial(k - ell, t - u) * binomial(ell, u), 2 * (t - u) + ell, 2 * u + k - ell);
    }
    return q;
}

Polynomial branch_conditional_polynomial(const BranchIndex& idx) {
    const int k = idx.k, ell = idx.ell, t = idx.t;
    Polynomial q;
    for (int u = std::max(0, t - k + ell); u <= std::min(t, ell); ++u) {
        q.add(binomial(ell, u) * binomial(k - ell, t - u), ell + t - 2 * u, k - ell - t + 2 * u);
    }
    return q;
}

Polynomial branch_weight_polynomial(const BranchIndex& idx) {
    const int k = idx.k, ell = idx.ell, t = idx.t;
    Polynomial q;
    for (int u = std::max(0, t - k + ell); u <= std::min(t, ell); ++u) {
        q.add(binomial(ell, u) * binomial(k - ell, t - u), 2 * ell + t - 2 * u, 2 * (k - ell) - t + 2 * u);
    }
    return q;
}

ProfileFunction apply_sqrt_t(const ProfileFunction& f, const Polynomial& q, std::size_t intervals) {
    if (q.is_one()) return f;
    std::vector<double> xs =
        f.kind() == ProfileFunction::Kind::Samples ? f.xs() : linspace(0.0, 1.0, intervals + 1);
    std::vector<double> gs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double qx = q(xs[i]);
        if (qx < tol::branch_polynomial_floor) {
            std::ostringstream msg;
            msg << "branch polynomial is negative (" << qx << ") at x = " << xs[i];
            throw NumericalError(msg.str());
        }
        gs[i] = std::sqrt(std::max(qx, 0.0)) * f.value(xs[i]);
    }
    return ProfileFunction::from_samples(std::move(xs), std::move(gs), false);
}

// ── Mixtures ──

namespace {

constexpr int max_mixture_order = 400;

std::vector<double> poisson_weights(double epsilon, int k_max) {
    std::vector<double> w(static_cast<std::size_t>(k_max) + 1);
    w[0] = std::exp(-epsilon);
    for (int k = 1; k <= k_max; ++k) w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k - 1)] * epsilon / k;
    return w;
}

void require_epsilon(double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
}

} // namespace

KMixture KMixture::poisson(double epsilon) {
    require_epsilon(epsilon);
    std::vector<double> w{std::exp(-epsilon)};
    double kept = w[0];
    while (1.0 - kept >= tol::poisson_tail) {
        if (static_cast<int>(w.size()) > max_mixture_order) throw ValidationError("epsilon too large for the Poisson mixture");
        const double next = w.back() * epsilon / static_cast<double>(w.size());
        w.push_back(next);
        kept += next;
    }
    return KMixture(std::move(w), epsilon);
}

KMixture KMixture::poisson(double epsilon, int k_max) {
    require_epsilon(epsilon);
    if (k_max < 0 || k_max > max_mixture_order) throw ValidationError("k_max out of range");
    KMixture mix(poisson_weights(epsilon, k_max), epsilon);
    if (mix.mass() < 1.0 - tol::poisson_tail) {
        std::ostringstream msg;
        msg << "Poisson mixture truncated at k_max = " << k_max << " keeps mass " << mix.mass() << " < 1 - "
            << tol::poisson_tail;
        throw ValidationError(msg.str());
    }
    return mix;
}

KMixture KMixture::binomial(int n, double p) {
    if (n < 1) throw ValidationError("binomial mixture needs n >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("binomial mixture needs p in [0, 1]");
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    if (p == 1.0) {
        w[static_cast<std::size_t>(n)] = 1.0;
    } else {
        w[0] = std::pow(1.0 - p, n);
        for (int k = 0; k < n; ++k) {
            w[static_cast<std::size_t>(k) + 1] = w[static_cast<std::size_t>(k)] * (n - k) / (k + 1.0) * p / (1.0 - p);
        }
    }
    double kept = 0.0;
    std::size_t keep = 0;
    while (keep < w.size()) {
        kept += w[keep++];
        if (1.0 - kept < tol::poisson_tail) break;
    }
    w.resize(keep);
    return KMixture(std::move(w), n * p);
}

double KMixture::mass() const {
    double sum = 0.0;
    for (double v : weights_) sum += v;
    return sum;
}

std::vector<WeightedBranch> enumerate_branches(const KMixture& mix, BranchModel model) {
    std::vector<WeightedBranch> out;
    for (int k = 0; k <= mix.k_max(); ++k) {
        const double wk = mix.weights()[static_cast<std::size_t>(k)];
        if (wk == 0.0) continue;
        for (int ell = 0; ell <= k; ++ell) {
            for (int t = 0; t <= k; ++t) {
                const BranchIndex idx(k, ell, t);
                Polynomial q = model == BranchModel::Printed ? t_operator_polynomial(idx) : branch_weight_polynomial(idx);
                if (q.is_zero()) continue;
                out.push_back({idx, wk * qpe::binomial(k, ell), std::move(q)});
            }
        }
    }
    return out;
}

// ── Branch sums ──

namespace {

double kinetic_energy(const ProfileFunction& g) {
    if (g.kind() != ProfileFunction::Kind::Samples) {
        auto slope_sq = [&g](double x) {
            const double d = g.derivative(x);
            return d * d;
        };
        return integrate(slope_sq, 0.0, 1.0, 1e-12);
    }
    const auto& xs = g.xs();
    const auto& fs = g.fs();
    double sum = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double df = fs[i] - fs[i - 1];
        sum += df * df / (xs[i] - xs[i - 1]);
    }
    return sum;
}

// Evaluates body(i) for every branch and returns the results in branch order.
template <class T, class Body>
std::vector<T> map_branches(std::size_t count, unsigned threads, Body body) {
    std::vector<T> out(count);
    parallel_chunks(ChunkPlan{count, 1}, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = body(i);
    });
    return out;
}

} // namespace

NoisyAverageError noisy_average_error(const ProfileFunction& f, const KMixture& mix, int n, ErrorKernel kernel,
                                      BranchModel model, std::size_t intervals, unsigned threads) {
    if (n < 1) throw ValidationError("noisy_average_error needs n >= 1");
    const std::vector<WeightedBranch> branches = enumerate_branches(mix, model);
    const bool dirichlet = f.is_dirichlet(tol::dirichlet);
    const ComplexVector a = spectrum_from_profile(f, n).spectrum.coefficients();
    const double scale = kernel == ErrorKernel::HalfAngle ? 0.25 : 1.0;

    struct Parts {
        double kinetic = 0.0;
        double finite = 0.0;
        double mass = 0.0;
    };
    const auto parts = map_branches<Parts>(branches.size(), threads, [&](std::size_t i) {
        const WeightedBranch& br = branches[i];
        Parts p;
        ComplexVector ab = a;
        for (int m = 0; m <= n; ++m) ab(m) *= std::sqrt(std::max(br.polynomial(static_cast<double>(m) / n), 0.0));
        p.finite = error_quadratic_form(ab, kernel);
        const ProfileFunction g = apply_sqrt_t(f, br.polynomial, intervals);
        p.mass = g.squared_norm();
        if (dirichlet) p.kinetic = kinetic_energy(g);
        return p;
    });

    NoisyAverageError out{std::nullopt, 0.0, 0.0};
    double kinetic = 0.0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        kinetic += branches[i].weight * parts[i].kinetic;
        out.finite_n += branches[i].weight * parts[i].finite;
        out.branch_mass += branches[i].weight * parts[i].mass;
    }
    if (dirichlet) out.asymptotic = scale * kinetic / (static_cast<double>(n) * n);
    return out;
}

NoisyDensity noisy_limiting_density(const ProfileFunction& f, const KMixture& mix, const std::vector<double>& t_grid,
                                    BranchModel model, std::size_t intervals, unsigned threads) {
    const std::vector<WeightedBranch> branches = enumerate_branches(mix, model);
    struct Parts {
        std::vector<double> density;
        double mass = 0.0;
    };
    const auto parts = map_branches<Parts>(branches.size(), threads, [&](std::size_t i) {
        const ProfileFunction g = apply_sqrt_t(f, branches[i].polynomial, intervals);
        Parts p;
        p.mass = g.squared_norm();
        p.density.resize(t_grid.size());
        for (std::size_t j = 0; j < t_grid.size(); ++j) p.density[j] = std::norm(fourier_transform(g, t_grid[j]));
        return p;
    });
    std::vector<double> density(t_grid.size(), 0.0);
    double weight_mass = 0.0;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        for (std::size_t j = 0; j < t_grid.size(); ++j) density[j] += branches[i].weight * parts[i].density[j];
        weight_mass += branches[i].weight * parts[i].mass;
    }
    DensityCurve curve(t_grid, std::move(density));
    const double mass = curve.normalization();
    return {std::move(curve), mass, weight_mass};
}

// ── Total-spin oracle ──

namespace {

constexpr int oracle_max_n = 12;

struct SpinDecomposition {
    std::vector<unsigned> basis;     // bitmasks of weight m, qubit 0 in the top bit
    std::vector<int> index_of;       // bitmask -> basis index, -1 otherwise
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    std::vector<int> defect;         // t = n/2 - j per eigenvector
};

std::shared_ptr<const SpinDecomposition> spin_decomposition(int n, int m) {
    static std::mutex guard;
    static std::map<std::pair<int, int>, std::shared_ptr<const SpinDecomposition>> cache;
    {
        std::lock_guard<std::mutex> lock(guard);
        const auto it = cache.find({n, m});
        if (it != cache.end()) return it->second;
    }
    auto dec = std::make_shared<SpinDecomposition>();
    dec->index_of.assign(std::size_t{1} << n, -1);
    for (unsigned s = 0; s < (1u << n); ++s) {
        if (std::popcount(s) == m) {
            dec->index_of[s] = static_cast<int>(dec->basis.size());
            dec->basis.push_back(s);
        }
    }
    const auto dim = static_cast<Eigen::Index>(dec->basis.size());
    // J^2 = 3n/4 - n(n-1)/4 + sum_{a<b} P_ab
    Eigen::MatrixXd j2 = Eigen::MatrixXd::Identity(dim, dim) * (0.75 * n - 0.25 * n * (n - 1));
    for (Eigen::Index col = 0; col < dim; ++col) {
        const unsigned s = dec->basis[static_cast<std::size_t>(col)];
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                const unsigned bit_a = (s >> a) & 1u, bit_b = (s >> b) & 1u;
                if (bit_a == bit_b) {
                    j2(col, col) += 1.0;
                } else {
                    const unsigned swapped = s ^ ((1u << a) | (1u << b));
                    j2(dec->index_of[swapped], col) += 1.0;
                }
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j2);
    if (solver.info() != Eigen::Success) throw NumericalError("J^2 eigensolver did not converge");
    dec->eigenvalues = solver.eigenvalues();
    dec->eigenvectors = solver.eigenvectors();
    dec->defect.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double lambda = dec->eigenvalues(i);
        const double j = 0.5 * (std::sqrt(1.0 + 4.0 * std::max(lambda, 0.0)) - 1.0);
        const double two_j = std::round(2.0 * j);
        const double jr = 0.5 * two_j;
        if (std::abs(lambda - jr * (jr + 1.0)) > 1e-8 || (static_cast<int>(two_j) - n) % 2 != 0 ||
            jr < std::abs(m - 0.5 * n) - 1e-9) {
            std::ostringstream msg;
            msg << "J^2 eigenvalue " << lambda << " is not an allowed j(j+1) for n=" << n << ", m=" << m;
            throw NumericalError(msg.str());
        }
        dec->defect[static_cast<std::size_t>(i)] = (n - static_cast<int>(two_j)) / 2;
    }
    std::lock_guard<std::mutex> lock(guard);
    return cache.emplace(std::make_pair(n, m), std::move(dec)).first->second;
}

void require_oracle_range(int n, int m, int k, int ell) {
    if (n < 1 || n > oracle_max_n) {
        throw ValidationError("the total-spin oracle is limited to 1 <= n <= " + std::to_string(oracle_max_n));
    }
    if (m < 0 || m > n || ell < 0 || ell > k || k > n) {
        std::ostringstream msg;
        msg << "oracle index out of range: n=" << n << " m=" << m << " k=" << k << " ell=" << ell;
        throw ValidationError(msg.str());
    }
}

int defect_of(int n, double j) {
    const double two_j = 2.0 * j;
    if (!(j >= 0.0) || std::abs(two_j - std::round(two_j)) > 1e-12 || (n - static_cast<int>(std::round(two_j))) % 2 != 0 ||
        two_j > n + 1e-12) {
        std::ostringstream msg;
        msg << "j = " << j << " is not an allowed total spin for n = " << n;
        throw ValidationError(msg.str());
    }
    return (n - static_cast<int>(std::round(two_j))) / 2;
}

} // namespace

std::vector<double> total_spin_spectrum(int n, int m) {
    require_oracle_range(n, m, 0, 0);
    const auto dec = spin_decomposition(n, m);
    return {dec->eigenvalues.data(), dec->eigenvalues.data() + dec->eigenvalues.size()};
}

std::vector<double> d_coefficient_sectors(int n, int m, int k, int ell) {
    require_oracle_range(n, m, k, ell);
    std::vector<double> out(static_cast<std::size_t>(n / 2) + 1, 0.0);
    const double b = b_coefficient(n, m, k, ell);
    if (b == 0.0) return out;
    const auto dec = spin_decomposition(n, m);

    // |1>^ell |0>^{k-ell} |Xi_{n-k, m-ell}>, qubit q stored in bit n-1-q.
    unsigned prefix = 0;
    for (int q = 0; q < ell; ++q) prefix |= 1u << (n - 1 - q);
    const int rest = n - k;
    const double amp = 1.0 / std::sqrt(binomial(rest, m - ell));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dec->basis.size()));
    for (unsigned s = 0; s < (1u << rest); ++s) {
        if (std::popcount(s) == m - ell) v(dec->index_of[prefix | s]) = amp;
    }
    const Eigen::VectorXd overlaps = dec->eigenvectors.transpose() * v;
    for (Eigen::Index i = 0; i < overlaps.size(); ++i) {
        out[static_cast<std::size_t>(dec->defect[static_cast<std::size_t>(i)])] += overlaps(i) * overlaps(i);
    }
    for (double& d : out) d = b * std::sqrt(d);
    return out;
}

double d_coefficient_oracle(int n, double j, int m, int k, int ell) {
    require_oracle_range(n, m, k, ell);
    const int t = defect_of(n, j);
    return d_coefficient_sectors(n, m, k, ell)[static_cast<std::size_t>(t)];
}

OracleCache::OracleCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream row(line);
        int n, two_j, m, k, ell;
        double d;
        if (row >> n >> two_j >> m >> k >> ell >> d) values_[{n, two_j, m, k, ell}] = d;
    }
}

double OracleCache::d(int n, double j, int m, int k, int ell) {
    require_oracle_range(n, m, k, ell);
    const int t = defect_of(n, j);
    const Key key{n, n - 2 * t, m, k, ell};
    if (const auto it = values_.find(key); it != values_.end()) {
        ++hits_;
        return it->second;
    }
    ++misses_;
    const std::vector<double> sectors = d_coefficient_sectors(n, m, k, ell);
    for (std::size_t s = 0; s < sectors.size(); ++s) values_[{n, n - 2 * static_cast<int>(s), m, k, ell}] = sectors[s];
    dirty_ = true;
    return sectors[static_cast<std::size_t>(t)];
}

void OracleCache::flush() {
    if (!dirty_) return;
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw ValidationError("cannot write oracle cache '" + path_ + "'");
    out << "n,two_j,m,k,ell,d\n" << std::setprecision(17);
    for (const auto& [key, d] : values_) {
        const auto& [n, two_j, m, k, ell] = key;
        out << n << ',' << two_j << ',' << m << ',' << k << ',' << ell << ',' << d << '\n';
    }
    dirty_ = false;
}

} // namespace qpe
