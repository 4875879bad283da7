#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "qpe/covariant.hpp"
#include "qpe/curve.hpp"

namespace qpe {

//! A dephasing branch: k pinched qubits, ell of them read as |1>, landing in
//! the total-spin sector j = n/2 - t.
struct BranchIndex {
    BranchIndex(int k, int ell, int t);

    int k;
    int ell;
    int t;
};

//! sum_i coef_i x^{a_i} (1-x)^{b_i}. Kept in this form because expanding
//! high powers of (1-x) into monomials cancels catastrophically.
class Polynomial {
  public:
    struct Term {
        double coef;
        int x_power;
        int complement_power;
    };

    Polynomial() = default;
    static Polynomial one();

    void add(double coef, int x_power, int complement_power);
    double operator()(double x) const;
    const std::vector<Term>& terms() const { return terms_; }
    bool is_one() const;
    bool is_zero() const { return terms_.empty(); }
    //! Monomial coefficients c_0..c_deg; intended for low degrees only.
    std::vector<double> monomial_coefficients() const;

  private:
    std::vector<Term> terms_;
};

double binomial(int n, int k);

//! sqrt(m(m-1)...(m-ell+1) (n-m)...(n-m-k+ell+1) / (n(n-1)...(n-k+1))).
double b_coefficient(int n, int m, int k, int ell);

//! The multiplication operator as printed:
//! sum_u C(k-ell, t-u) C(ell, u) x^{2(t-u)+ell} (1-x)^{2u+k-ell}.
Polynomial t_operator_polynomial(const BranchIndex& idx);

//! Large-n limit of the sector weight d^2 / b^2 of the branch, i.e. the
//! distribution of t = u + v with u ~ Bin(ell, 1-x), v ~ Bin(k-ell, x):
//! sum_u C(ell, u) C(k-ell, t-u) x^{ell+t-2u} (1-x)^{k-ell-t+2u}. Sums to 1 over t.
Polynomial branch_conditional_polynomial(const BranchIndex& idx);

//! x^ell (1-x)^{k-ell} times the conditional weight: the large-n limit of d^2.
//! Summed over t and over ell with C(k, ell) it gives 1.
Polynomial branch_weight_polynomial(const BranchIndex& idx);

//! g = sqrt(q) f sampled on f's grid (or `intervals` equal cells for closed
//! forms), not renormalized. A polynomial identically 1 returns f itself.
ProfileFunction apply_sqrt_t(const ProfileFunction& f, const Polynomial& q, std::size_t intervals = 1024);

//! Truncated distribution of the number k of dephased qubits.
class KMixture {
  public:
    //! Poisson(epsilon) truncated at the smallest k whose tail is below the
    //! Poisson tolerance.
    static KMixture poisson(double epsilon);
    //! Poisson(epsilon) on 0..k_max; rejected when the kept mass is short.
    static KMixture poisson(double epsilon, int k_max);
    //! Binomial(n, p), truncated like the Poisson case.
    static KMixture binomial(int n, double p);

    const std::vector<double>& weights() const { return weights_; }
    int k_max() const { return static_cast<int>(weights_.size()) - 1; }
    double mass() const;
    double epsilon() const { return epsilon_; }

  private:
    KMixture(std::vector<double> weights, double epsilon) : weights_(std::move(weights)), epsilon_(epsilon) {}

    std::vector<double> weights_;
    double epsilon_;
};

enum class BranchModel {
    Printed,  //!< C(k, ell) sqrt(T_{t,k,ell}) f with the printed T
    Corrected //!< C(k, ell) sqrt(d^2 limit) f, total weight 1
};

//! One weighted branch of the mixture: C(k, ell) times the mixture weight of k.
struct WeightedBranch {
    BranchIndex index;
    double weight;
    Polynomial polynomial;
};

std::vector<WeightedBranch> enumerate_branches(const KMixture& mix, BranchModel model);

struct NoisyAverageError {
    //! sum w <g|P^2|g> / (4 n^2) (half-angle) or / n^2 (full-angle); empty
    //! unless f satisfies the Dirichlet condition.
    std::optional<double> asymptotic;
    double finite_n;     //!< sum w error_quadratic_form of the branch spectra at this n
    double branch_mass;  //!< sum w ||g||^2
};

NoisyAverageError noisy_average_error(const ProfileFunction& f, const KMixture& mix, int n, ErrorKernel kernel,
                                      BranchModel model = BranchModel::Corrected, std::size_t intervals = 4096,
                                      unsigned threads = 1);

struct NoisyDensity {
    DensityCurve curve;
    double mass;        //!< trapezoid mass over the window
    double weight_mass; //!< sum of branch weights times ||g||^2
};

NoisyDensity noisy_limiting_density(const ProfileFunction& f, const KMixture& mix, const std::vector<double>& t_grid,
                                    BranchModel model = BranchModel::Corrected, std::size_t intervals = 1024,
                                    unsigned threads = 1);

//! Brute-force d_{n,j,m,k,ell} = b ||P_j |1>^ell |0>^{k-ell} |Xi_{n-k,m-ell}>||
//! from the total-spin decomposition of the weight-m subspace. n <= 12.
double d_coefficient_oracle(int n, double j, int m, int k, int ell);

//! All sector values d_{n,j,m,k,ell} for j = n/2 - t, t = 0..floor(n/2), in
//! one decomposition.
std::vector<double> d_coefficient_sectors(int n, int m, int k, int ell);

//! J^2 eigenvalues on the weight-m subspace, from a dense eigensolver.
std::vector<double> total_spin_spectrum(int n, int m);

//! CSV-backed memo of oracle values keyed by (n, 2j, m, k, ell).
class OracleCache {
  public:
    explicit OracleCache(std::string path);

    double d(int n, double j, int m, int k, int ell);
    void flush();
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

  private:
    using Key = std::tuple<int, int, int, int, int>;

    std::string path_;
    std::map<Key, double> values_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
    bool dirty_ = false;
};

} // namespace qpe
