#include "qpe/covariant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <gsl/gsl_integration.h>

#include "qpe/errors.hpp"
#include "qpe/stats.hpp"
#include "qpe/tolerances.hpp"

namespace qpe {

namespace {

constexpr double pi = std::numbers::pi;
const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * pi);
const cplx I_unit(0.0, 1.0);

// int_0^1 (1-s) e^{i theta s} ds
cplx hat_half(double theta) {
    if (std::abs(theta) < 1e-2) {
        // sum_k (i theta)^k / (k! (k+1) (k+2))
        cplx term(1.0, 0.0), sum(0.0, 0.0);
        for (int k = 0; k < 12; ++k) {
            if (k > 0) term *= I_unit * theta / static_cast<double>(k);
            sum += term / static_cast<double>((k + 1) * (k + 2));
        }
        return sum;
    }
    const cplx a = I_unit * theta;
    return (std::exp(a) - 1.0 - a) / (a * a);
}

// sin(x/2)/x, continuous at 0.
double half_sinc(double x) {
    if (std::abs(x) < 1e-6) return 0.5 - x * x / 48.0;
    return std::sin(0.5 * x) / x;
}

bool spacing_is_uniform(const std::vector<double>& xs) {
    const double h = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::abs(xs[i] - (xs.front() + h * static_cast<double>(i))) > 1e-12) return false;
    }
    return true;
}

} // namespace

ErrorKernel parse_kernel(const std::string& name) {
    if (name == "half-angle") return ErrorKernel::HalfAngle;
    if (name == "full-angle") return ErrorKernel::FullAngle;
    throw ValidationError("unknown error kernel '" + name + "' (expected half-angle or full-angle)");
}

std::string kernel_name(ErrorKernel kernel) {
    return kernel == ErrorKernel::HalfAngle ? "half-angle" : "full-angle";
}

double kernel_value(ErrorKernel kernel, double phi) {
    const double s = kernel == ErrorKernel::HalfAngle ? std::sin(0.5 * phi) : std::sin(phi);
    return s * s;
}

InputSpectrum::InputSpectrum(ComplexVector coefficients) : coefficients_(std::move(coefficients)) {
    if (coefficients_.size() == 0) throw ValidationError("spectrum is empty");
    const double n2 = coefficients_.squaredNorm();
    if (std::abs(n2 - 1.0) > tol::norm) {
        std::ostringstream msg;
        msg << "spectrum is not normalized: sum |a_m|^2 = " << n2;
        throw ValidationError(msg.str());
    }
}

// ── Profiles ──

ProfileFunction ProfileFunction::uniform() { return ProfileFunction(Kind::Uniform, 0); }

ProfileFunction ProfileFunction::sine(int mode) {
    if (mode < 1) throw ValidationError("sine profile mode must be >= 1");
    return ProfileFunction(Kind::Sine, mode);
}

ProfileFunction ProfileFunction::from_samples(std::vector<double> xs, std::vector<double> fs, bool normalize) {
    if (xs.size() != fs.size() || xs.size() < 2) throw ValidationError("profile needs >= 2 matching samples");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(fs[i])) throw ValidationError("profile sample is not finite");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw ValidationError("profile abscissae must increase strictly");
    }
    if (std::abs(xs.front()) > 1e-12 || std::abs(xs.back() - 1.0) > 1e-12) {
        throw ValidationError("profile samples must span [0, 1]");
    }
    xs.front() = 0.0;
    xs.back() = 1.0;
    ProfileFunction f(Kind::Samples, 0);
    f.xs_ = std::move(xs);
    f.fs_ = std::move(fs);
    f.uniform_spacing_ = spacing_is_uniform(f.xs_);
    if (normalize) {
        const double n2 = f.squared_norm();
        if (!(n2 > 0.0)) throw ValidationError("profile vanishes identically");
        const double scale = 1.0 / std::sqrt(n2);
        for (double& v : f.fs_) v *= scale;
        f.renormalization_ = scale;
    }
    return f;
}

ProfileFunction ProfileFunction::sampled(const std::function<double(double)>& fn, std::size_t intervals,
                                         bool normalize) {
    if (intervals < 1) throw ValidationError("sampling needs at least one interval");
    std::vector<double> xs(intervals + 1), fs(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        xs[i] = static_cast<double>(i) / static_cast<double>(intervals);
        fs[i] = fn(xs[i]);
    }
    return from_samples(std::move(xs), std::move(fs), normalize);
}

ProfileFunction ProfileFunction::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile file '" + path + "'");
    std::vector<double> xs, fs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& c : line) {
            if (c == ',') c = ' ';
        }
        std::istringstream row(line);
        double x, v;
        if (!(row >> x)) continue;
        if (!(row >> v)) {
            throw ValidationError("profile file '" + path + "' line " + std::to_string(line_no) + ": expected two columns");
        }
        xs.push_back(x);
        fs.push_back(v);
    }
    return from_samples(std::move(xs), std::move(fs), true);
}

std::string ProfileFunction::describe() const {
    switch (kind_) {
    case Kind::Uniform:
        return "uniform";
    case Kind::Sine:
        return mode_ == 1 ? "sine" : "sine:" + std::to_string(mode_);
    case Kind::Samples:
        break;
    }
    return "samples(" + std::to_string(xs_.size()) + ")";
}

double ProfileFunction::value(double x) const {
    switch (kind_) {
    case Kind::Uniform:
        return 1.0;
    case Kind::Sine:
        return std::sqrt(2.0) * std::sin(mode_ * pi * x);
    case Kind::Samples:
        break;
    }
    if (x <= 0.0) return fs_.front();
    if (x >= 1.0) return fs_.back();
    std::size_t i;
    if (uniform_spacing_) {
        i = std::min(xs_.size() - 2, static_cast<std::size_t>(x * static_cast<double>(xs_.size() - 1)));
    } else {
        i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
    }
    const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return fs_[i] + w * (fs_[i + 1] - fs_[i]);
}

double ProfileFunction::derivative(double x) const {
    switch (kind_) {
    case Kind::Uniform:
        return 0.0;
    case Kind::Sine:
        return std::sqrt(2.0) * mode_ * pi * std::cos(mode_ * pi * x);
    case Kind::Samples:
        break;
    }
    std::size_t i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    i = std::clamp<std::size_t>(i, 1, xs_.size() - 1) - 1;
    return (fs_[i + 1] - fs_[i]) / (xs_[i + 1] - xs_[i]);
}

double ProfileFunction::squared_norm() const {
    if (kind_ != Kind::Samples) return 1.0;
    double sum = 0.0;
    for (std::size_t i = 1; i < xs_.size(); ++i) {
        // Exact for the linear interpolant on the cell.
        const double a = fs_[i - 1], b = fs_[i];
        sum += (a * a + a * b + b * b) * (xs_[i] - xs_[i - 1]) / 3.0;
    }
    return sum;
}

bool ProfileFunction::is_dirichlet(double tol) const {
    return std::abs(value(0.0)) <= tol && std::abs(value(1.0)) <= tol;
}

ProfileSpectrum spectrum_from_profile(const ProfileFunction& f, int n) {
    if (n < 1) throw ValidationError("spectrum size n must be >= 1");
    ComplexVector a(n + 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n) + 1.0);
    for (int m = 0; m <= n; ++m) a(m) = scale * f.value(static_cast<double>(m) / n);
    const double norm = a.norm();
    if (!(norm > 0.0)) throw ValidationError("profile samples to an all-zero spectrum at n = " + std::to_string(n));
    a /= norm;
    a /= std::sqrt(a.squaredNorm()); // second pass keeps the norm inside 1e-12
    return {InputSpectrum(std::move(a)), norm};
}

// ── Error functionals ──

Eigen::MatrixXd error_kernel_matrix(int n, ErrorKernel kernel) {
    if (n < 0) throw ValidationError("kernel size must be >= 0");
    const int shift = kernel == ErrorKernel::HalfAngle ? 1 : 2;
    Eigen::MatrixXd t = 0.5 * Eigen::MatrixXd::Identity(n + 1, n + 1);
    for (int m = 0; m + shift <= n; ++m) {
        t(m, m + shift) = -0.25;
        t(m + shift, m) = -0.25;
    }
    return t;
}

double error_quadratic_form(const ComplexVector& a, ErrorKernel kernel) {
    const Eigen::Index shift = kernel == ErrorKernel::HalfAngle ? 1 : 2;
    double overlap = 0.0;
    for (Eigen::Index m = 0; m + shift < a.size(); ++m) overlap += std::real(std::conj(a(m + shift)) * a(m));
    return 0.5 * a.squaredNorm() - 0.5 * overlap;
}

double error_quadratic_form(const InputSpectrum& a, ErrorKernel kernel) {
    return error_quadratic_form(a.coefficients(), kernel);
}

OptimalState optimal_state(int n) {
    if (n < 1) throw ValidationError("optimal_state needs n >= 1");
    ComplexVector a(n + 1);
    for (int m = 0; m <= n; ++m) a(m) = std::sin(pi * m / (n + 1.0));
    a /= a.norm();
    return {InputSpectrum(std::move(a)), 0.5 * (1.0 - std::cos(pi / (n + 1.0)))};
}

KernelMinimum half_angle_minimum(int n) {
    if (n < 0) throw ValidationError("half_angle_minimum needs n >= 0");
    ComplexVector a(n + 1);
    for (int m = 0; m <= n; ++m) a(m) = std::sin(pi * (m + 1.0) / (n + 2.0));
    a /= a.norm();
    return {InputSpectrum(std::move(a)), 0.5 * (1.0 - std::cos(pi / (n + 2.0)))};
}

// ── Outcome densities ──

std::vector<double> phase_grid(std::size_t intervals) { return linspace(-pi, pi, intervals + 1); }

double outcome_density_at(const InputSpectrum& a, double phi) {
    const ComplexVector& c = a.coefficients();
    // Horner in z = e^{i phi}.
    const cplx z = std::polar(1.0, phi);
    cplx s(0.0, 0.0);
    for (Eigen::Index m = c.size(); m-- > 0;) s = s * z + c(m);
    return std::norm(s) / (2.0 * pi);
}

DensityCurve outcome_density(const InputSpectrum& a, const std::vector<double>& phi_grid) {
    std::vector<double> dens(phi_grid.size());
    for (std::size_t i = 0; i < phi_grid.size(); ++i) {
        if (phi_grid[i] < -pi - 1e-12 || phi_grid[i] > pi + 1e-12) {
            throw ValidationError("outcome density grid must lie within [-pi, pi]");
        }
        dens[i] = outcome_density_at(a, phi_grid[i]);
    }
    return DensityCurve(phi_grid, std::move(dens));
}

OutcomeCdf::OutcomeCdf(const InputSpectrum& a) {
    const ComplexVector& c = a.coefficients();
    const Eigen::Index n = c.size() - 1;
    autocorrelation_.assign(static_cast<std::size_t>(n + 1), cplx(0.0, 0.0));
    for (Eigen::Index d = 0; d <= n; ++d) {
        cplx s(0.0, 0.0);
        for (Eigen::Index m = 0; m + d <= n; ++m) s += c(m + d) * std::conj(c(m));
        autocorrelation_[static_cast<std::size_t>(d)] = s;
    }
}

double OutcomeCdf::operator()(double phi) const {
    phi = std::clamp(phi, -pi, pi);
    // F(phi) = (phi + pi) c_0 / 2pi + (1/pi) sum_{d>=1} Re[c_d (e^{i d phi} - (-1)^d) / (i d)]
    double sum = 0.0;
    const cplx z = std::polar(1.0, phi);
    cplx zd(1.0, 0.0);
    double sign = 1.0;
    for (std::size_t d = 1; d < autocorrelation_.size(); ++d) {
        zd *= z;
        if ((d & 63u) == 0) zd = std::polar(1.0, static_cast<double>(d) * phi);
        sign = -sign;
        sum += std::real(autocorrelation_[d] * (zd - sign) / (I_unit * static_cast<double>(d)));
    }
    return (phi + pi) * autocorrelation_[0].real() / (2.0 * pi) + sum / pi;
}

double average_error_exact(const InputSpectrum& a, ErrorKernel kernel, std::size_t min_points) {
    std::size_t points = std::max<std::size_t>(min_points, 16);
    while (points < 4 * static_cast<std::size_t>(a.n() + 3)) points *= 2;
    const double step = 2.0 * pi / static_cast<double>(points);
    double sum = 0.0;
    for (std::size_t j = 0; j < points; ++j) {
        const double phi = -pi + step * static_cast<double>(j);
        sum += kernel_value(kernel, phi) * outcome_density_at(a, phi);
    }
    return sum * step;
}

std::vector<double> discrete_estimator_cells(const InputSpectrum& a, int outcomes, int cells) {
    if (outcomes < a.n() + 1) throw ValidationError("a discrete estimator needs at least n+1 outcomes");
    if (cells < 1) throw ValidationError("need at least one cell");
    constexpr std::size_t nodes = 48;
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> rule(
        gsl_integration_glfixed_table_alloc(nodes), &gsl_integration_glfixed_table_free);
    const ComplexVector& c = a.coefficients();
    auto outcome_probability = [&](double estimate, double theta) {
        const cplx z = std::polar(1.0, estimate - theta);
        cplx s(0.0, 0.0);
        for (Eigen::Index m = c.size(); m-- > 0;) s = s * z + c(m);
        return std::norm(s) / static_cast<double>(outcomes);
    };
    std::vector<double> prob(static_cast<std::size_t>(cells), 0.0);
    for (int i = 0; i < cells; ++i) {
        const double lo = -pi + 2.0 * pi * i / cells;
        const double hi = -pi + 2.0 * pi * (i + 1) / cells;
        double total = 0.0;
        for (int j = 0; j < outcomes; ++j) {
            const double estimate = 2.0 * pi * j / outcomes;
            // est - theta in [lo, hi]  <=>  theta in [est - hi, est - lo]
            for (std::size_t k = 0; k < nodes; ++k) {
                double x, w;
                gsl_integration_glfixed_point(estimate - hi, estimate - lo, k, &x, &w, rule.get());
                total += w * outcome_probability(estimate, x);
            }
        }
        prob[static_cast<std::size_t>(i)] = total / (2.0 * pi);
    }
    return prob;
}

// ── Fourier limit ──

cplx fourier_transform(const ProfileFunction& f, double t) {
    switch (f.kind()) {
    case ProfileFunction::Kind::Uniform:
        // int_0^1 e^{ixt} dx = e^{it/2} 2 sin(t/2)/t
        return inv_sqrt_2pi * std::polar(1.0, 0.5 * t) * (2.0 * half_sinc(t));
    case ProfileFunction::Kind::Sine: {
        if (t < 0.0) return std::conj(fourier_transform(f, -t));
        // sqrt2 int_0^1 sin(k pi x) e^{ixt} dx = sqrt2 k pi (1 - e^{i delta}) / (-delta (k pi + t)), delta = t - k pi
        const double kpi = f.mode() * pi;
        const double delta = t - kpi;
        const cplx integral = std::sqrt(2.0) * kpi * 2.0 * I_unit * std::polar(1.0, 0.5 * delta) * half_sinc(delta) /
                              (kpi + t);
        return inv_sqrt_2pi * integral;
    }
    case ProfileFunction::Kind::Samples:
        break;
    }
    const auto& xs = f.xs();
    const auto& fs = f.fs();
    const std::size_t segs = xs.size() - 1;
    cplx sum(0.0, 0.0);
    if (f.uniform_spacing()) {
        const double h = 1.0 / static_cast<double>(segs);
        const double theta = t * h;
        const cplx left = hat_half(theta);
        const cplx right = std::polar(1.0, theta) * hat_half(-theta);
        const cplx z = std::polar(1.0, theta);
        cplx zj(1.0, 0.0);
        for (std::size_t j = 0; j < segs; ++j) {
            if (j > 0 && (j & 255u) == 0) zj = std::polar(1.0, theta * static_cast<double>(j));
            sum += zj * (fs[j] * left + fs[j + 1] * right);
            zj *= z;
        }
        return inv_sqrt_2pi * h * sum;
    }
    for (std::size_t j = 0; j < segs; ++j) {
        const double h = xs[j + 1] - xs[j];
        const double theta = t * h;
        sum += h * std::polar(1.0, t * xs[j]) *
               (fs[j] * hat_half(theta) + fs[j + 1] * std::polar(1.0, theta) * hat_half(-theta));
    }
    return inv_sqrt_2pi * sum;
}

FourierDensity fourier_density(const ProfileFunction& f, const std::vector<double>& t_grid) {
    std::vector<double> dens(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) dens[i] = std::norm(fourier_transform(f, t_grid[i]));
    DensityCurve curve(t_grid, std::move(dens));
    const double mass = curve.normalization();
    const bool ok = std::abs(mass - f.squared_norm()) <= tol::parseval;
    return {std::move(curve), mass, ok};
}

FourierCdf::FourierCdf(const ProfileFunction& f, double t_max, double step) : norm_(f.squared_norm()) {
    if (!(t_max > 0.0) || !(step > 0.0)) throw ValidationError("Fourier CDF needs positive range and step");
    const std::size_t count = static_cast<std::size_t>(std::ceil(t_max / step)) + 1;
    grid_ = linspace(0.0, t_max, count);
    cumulative_.assign(count, 0.5 * norm_);
    double prev = std::norm(fourier_transform(f, 0.0));
    for (std::size_t i = 1; i < count; ++i) {
        const double cur = std::norm(fourier_transform(f, grid_[i]));
        cumulative_[i] = cumulative_[i - 1] + 0.5 * (prev + cur) * (grid_[i] - grid_[i - 1]);
        prev = cur;
    }
}

double FourierCdf::operator()(double t) const {
    if (t < 0.0) return norm_ - (*this)(-t);
    if (t >= grid_.back()) return cumulative_.back();
    const double pos = t / (grid_[1] - grid_[0]);
    const std::size_t i = std::min(grid_.size() - 2, static_cast<std::size_t>(pos));
    const double w = (t - grid_[i]) / (grid_[i + 1] - grid_[i]);
    return cumulative_[i] + w * (cumulative_[i + 1] - cumulative_[i]);
}

LimitingProbability limiting_distribution_noiseless(const ProfileFunction& f, int n, double a, double b) {
    if (!(a < b)) throw ValidationError("limiting distribution needs a < b");
    const ProfileSpectrum ps = spectrum_from_profile(f, n);
    const OutcomeCdf cdf(ps.spectrum);
    const double lo = std::max(a / n, -pi);
    const double hi = std::min(b / n, pi);
    const double exact = hi > lo ? cdf(hi) - cdf(lo) : 0.0;
    auto density = [&f](double t) { return std::norm(fourier_transform(f, t)); };
    const std::size_t intervals = std::max<std::size_t>(20000, static_cast<std::size_t>((b - a) * 4.0));
    const double fourier = integrate(density, a, b, 1e-9, intervals);
    return {exact, fourier};
}

double dirichlet_error_asymptote(const ProfileFunction& f) {
    if (!f.is_dirichlet(tol::dirichlet)) {
        std::ostringstream msg;
        msg << "profile " << f.describe() << " violates f(0) = f(1) = 0 (f(0) = " << f.value(0.0)
            << ", f(1) = " << f.value(1.0) << "); the error decays as 1/n, see a_plus_minus";
        throw ValidationError(msg.str());
    }
    if (f.kind() == ProfileFunction::Kind::Samples) {
        const auto& xs = f.xs();
        const auto& fs = f.fs();
        double sum = 0.0;
        for (std::size_t i = 1; i < xs.size(); ++i) {
            const double df = fs[i] - fs[i - 1];
            sum += df * df / (xs[i] - xs[i - 1]);
        }
        return sum;
    }
    auto slope_sq = [&f](double x) {
        const double d = f.derivative(x);
        return d * d;
    };
    return integrate(slope_sq, 0.0, 1.0, 1e-12);
}

APlusMinus a_plus_minus(const ProfileFunction& f, double r1, double r2) {
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw ValidationError("A+- windows need positive R1 and R2");
    auto weighted = [&f](double t) { return t * t * std::norm(fourier_transform(f, t)); };
    auto window = [&](double lo, double hi) {
        const auto intervals = static_cast<std::size_t>(std::max(20000.0, 4.0 * (hi - lo)));
        return integrate(weighted, lo, hi, 1e-10 * (hi - lo), intervals) / (hi - lo);
    };
    APlusMinus out;
    out.plus = window(r1, r1 + r2);
    out.minus = window(-r1 - r2, -r1);
    out.plus_at_double_r1 = window(2.0 * r1, 2.0 * r1 + r2);
    out.minus_at_double_r1 = window(-2.0 * r1 - r2, -2.0 * r1);
    return out;
}

double si_function(double x) {
    if (!std::isfinite(x)) throw ValidationError("Si needs a finite argument");
    if (x == 0.0) return 0.0;
    auto sinc = [](double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; };
    const double ax = std::abs(x);
    const auto intervals = static_cast<std::size_t>(std::max(1000.0, ax));
    const double v = integrate(sinc, 0.0, ax, 1e-13, intervals);
    return x < 0.0 ? -v : v;
}

} // namespace qpe
