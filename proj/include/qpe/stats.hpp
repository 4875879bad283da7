#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qpe/curve.hpp"

namespace qpe {

//! Finite values, kept sorted.
class EmpiricalSample {
  public:
    explicit EmpiricalSample(std::vector<double> values);

    const std::vector<double>& sorted() const { return sorted_; }
    std::size_t size() const { return sorted_.size(); }

  private:
    std::vector<double> sorted_;
};

//! sup |F_emp - F_ref| evaluated on both sides of every sample jump.
double ks_distance(const EmpiricalSample& sample, const std::function<double(double)>& cdf);
double ks_distance(const EmpiricalSample& sample, const TabulatedCdf& cdf);
double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b);

//! Linear-interpolated quantile, q in [0, 1].
double quantile(const EmpiricalSample& sample, double q);

struct Histogram {
    std::vector<double> centers;
    std::vector<double> counts;
    double width;
    std::size_t below;
    std::size_t above;
};

Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins);

struct ScalingFit {
    double exponent;
    double prefactor;
    double r_squared;
    std::size_t points_used;
};

//! Least squares of log(value) on log(n) after dropping the `skip_smallest`
//! smallest n; at least four points must remain.
ScalingFit scaling_exponent(std::vector<std::pair<double, double>> points, std::size_t skip_smallest = 2);

struct QuadratureResult {
    double value;
    double error_estimate;
    bool converged;
};

//! Globally adaptive Gauss-Kronrod integration to absolute tolerance `tol`.
QuadratureResult adaptive_quadrature(const std::function<double(double)>& f, double a, double b, double tol,
                                     std::size_t max_intervals = 20000);

//! As adaptive_quadrature, but throws NumericalError when not converged.
double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 std::size_t max_intervals = 20000);

} // namespace qpe
