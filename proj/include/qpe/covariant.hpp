#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qpe/curve.hpp"
#include "qpe/linalg.hpp"

namespace qpe {

enum class ErrorKernel {
    HalfAngle, //!< sin^2((est - theta)/2)
    FullAngle  //!< sin^2(est - theta)
};

ErrorKernel parse_kernel(const std::string& name);
std::string kernel_name(ErrorKernel kernel);
double kernel_value(ErrorKernel kernel, double phi);

//! Coefficients a_0..a_n of a probe in the photon-number-like basis |m>.
class InputSpectrum {
  public:
    explicit InputSpectrum(ComplexVector coefficients);

    const ComplexVector& coefficients() const { return coefficients_; }
    int n() const { return static_cast<int>(coefficients_.size()) - 1; }

  private:
    ComplexVector coefficients_;
};

//! Envelope f on [0, 1] from which spectra are sampled. Input profiles carry
//! unit L2 norm; branch profiles produced by the noisy analysis do not.
class ProfileFunction {
  public:
    enum class Kind { Uniform, Sine, Samples };

    static ProfileFunction uniform();
    //! sqrt(2) sin(mode pi x).
    static ProfileFunction sine(int mode = 1);
    //! Piecewise-linear through (xs, fs); xs strictly increasing from 0 to 1.
    //! Rescaled so the interpolant has unit L2 norm when `normalize` is set.
    static ProfileFunction from_samples(std::vector<double> xs, std::vector<double> fs, bool normalize = true);
    //! Samples fn on `intervals` equal cells of [0, 1].
    static ProfileFunction sampled(const std::function<double(double)>& fn, std::size_t intervals,
                                   bool normalize = true);
    //! Two whitespace-separated columns (x, f(x)); '#' starts a comment.
    static ProfileFunction load(const std::string& path);

    Kind kind() const { return kind_; }
    int mode() const { return mode_; }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& fs() const { return fs_; }
    //! Factor applied to the raw samples to reach unit norm (1 for closed forms).
    double renormalization() const { return renormalization_; }
    std::string describe() const;

    double value(double x) const;
    //! Slope of the interpolant for samples, exact derivative otherwise.
    double derivative(double x) const;
    //! Exact L2 norm squared of the interpolant (1 for closed forms).
    double squared_norm() const;
    bool is_dirichlet(double tol) const;
    bool uniform_spacing() const { return uniform_spacing_; }

  private:
    ProfileFunction(Kind kind, int mode) : kind_(kind), mode_(mode) {}

    Kind kind_;
    int mode_ = 0;
    std::vector<double> xs_;
    std::vector<double> fs_;
    double renormalization_ = 1.0;
    bool uniform_spacing_ = false;
};

struct ProfileSpectrum {
    InputSpectrum spectrum;
    double renormalization; //!< norm of the raw a_m = f(m/n)/sqrt(n+1), divided out
};

ProfileSpectrum spectrum_from_profile(const ProfileFunction& f, int n);

//! The (n+1)x(n+1) real symmetric matrix whose quadratic form is the
//! average error: tridiagonal (half-angle) or pentadiagonal (full-angle).
Eigen::MatrixXd error_kernel_matrix(int n, ErrorKernel kernel);

//! <a|T|a> for any coefficient vector (no normalization required).
double error_quadratic_form(const ComplexVector& a, ErrorKernel kernel);
double error_quadratic_form(const InputSpectrum& a, ErrorKernel kernel);

//! The sine-profile state C sin(pi m/(n+1)) and its half-angle error
//! 1/2 (1 - cos(pi/(n+1))). Its support is m = 1..n.
struct OptimalState {
    InputSpectrum spectrum;
    double min_error;
};

OptimalState optimal_state(int n);

//! Lowest eigenpair of the full (n+1)-level half-angle matrix:
//! 1/2 (1 - cos(pi/(n+2))) with eigenvector sin(pi (m+1)/(n+2)).
struct KernelMinimum {
    InputSpectrum spectrum;
    double min_error;
};

KernelMinimum half_angle_minimum(int n);

//! M points -pi + 2 pi j/M, j = 0..M (both ends of the circle included).
std::vector<double> phase_grid(std::size_t intervals);

//! |sum_m a_m e^{i m phi}|^2 / 2 pi, the density of est - theta.
double outcome_density_at(const InputSpectrum& a, double phi);
DensityCurve outcome_density(const InputSpectrum& a, const std::vector<double>& phi_grid);

//! Exact CDF of the outcome density on [-pi, pi] via its Fourier series.
class OutcomeCdf {
  public:
    explicit OutcomeCdf(const InputSpectrum& a);
    double operator()(double phi) const;

  private:
    std::vector<cplx> autocorrelation_; // c_d, d = 0..n
};

//! Periodic trapezoid of kernel x outcome density; the grid is large enough
//! that the rule is exact for the trigonometric integrand.
double average_error_exact(const InputSpectrum& a, ErrorKernel kernel, std::size_t min_points = 1u << 14);

//! Probability that est - theta lands in each of `cells` equal arcs of the
//! circle, for a discrete estimator with `outcomes` equally spaced results,
//! averaged over a uniform true phase. Computed by direct integration over
//! the true phase, independent of outcome_density.
std::vector<double> discrete_estimator_cells(const InputSpectrum& a, int outcomes, int cells);

//! F f(t) = (2 pi)^{-1/2} int_0^1 e^{ixt} f(x) dx.
cplx fourier_transform(const ProfileFunction& f, double t);

struct FourierDensity {
    DensityCurve curve;
    double parseval_mass; //!< trapezoid mass over the window
    bool parseval_ok;     //!< |mass - squared norm| within tolerance
};

FourierDensity fourier_density(const ProfileFunction& f, const std::vector<double>& t_grid);

//! CDF of |F f|^2 for a real profile, tabulated on [0, t_max] and mirrored
//! using |F f(-t)| = |F f(t)|.
class FourierCdf {
  public:
    FourierCdf(const ProfileFunction& f, double t_max, double step);
    double operator()(double t) const;

  private:
    double norm_;
    std::vector<double> grid_;
    std::vector<double> cumulative_;
};

struct LimitingProbability {
    double exact;   //!< P{a/n <= est - theta <= b/n} at finite n
    double fourier; //!< int_a^b |F f|^2
};

LimitingProbability limiting_distribution_noiseless(const ProfileFunction& f, int n, double a, double b);

//! <f|P^2|f> = int_0^1 |f'|^2 for a profile with f(0) = f(1) = 0.
double dirichlet_error_asymptote(const ProfileFunction& f);

struct APlusMinus {
    double plus;
    double minus;
    double plus_at_double_r1;
    double minus_at_double_r1;
};

//! Window averages of t^2 |F f(t)|^2 over [R1, R1+R2] and its mirror.
APlusMinus a_plus_minus(const ProfileFunction& f, double r1 = 200.0, double r2 = 400.0 * 3.14159265358979323846);

//! Sine integral by adaptive quadrature.
double si_function(double x);

} // namespace qpe
