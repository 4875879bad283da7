#include "qpe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "qpe/errors.hpp"

namespace qpe {

EmpiricalSample::EmpiricalSample(std::vector<double> values) : sorted_(std::move(values)) {
    if (sorted_.empty()) throw ValidationError("empirical sample is empty");
    for (double v : sorted_) {
        if (!std::isfinite(v)) throw ValidationError("empirical sample contains a non-finite value");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double ks_distance(const EmpiricalSample& sample, const std::function<double(double)>& cdf) {
    const auto& x = sample.sorted();
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    double prev_f = -1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        // Ties share one evaluation; the empirical CDF jumps past all of them.
        if (i > 0 && x[i] == x[i - 1]) continue;
        std::size_t j = i;
        while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
        const double f = cdf(x[i]);
        if (f < prev_f) throw ValidationError("reference CDF is not monotone");
        prev_f = f;
        d = std::max({d, std::abs(static_cast<double>(j + 1) / n - f), std::abs(f - static_cast<double>(i) / n)});
    }
    return d;
}

double ks_distance(const EmpiricalSample& sample, const TabulatedCdf& cdf) {
    return ks_distance(sample, [&cdf](double x) { return cdf(x); });
}

double ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b) {
    const auto& x = a.sorted();
    const auto& y = b.sorted();
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

double quantile(const EmpiricalSample& sample, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level must lie in [0, 1]");
    const auto& x = sample.sorted();
    const double pos = q * static_cast<double>(x.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return x[lo] + w * (x[hi] - x[lo]);
}

Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw ValidationError("histogram needs bins >= 1 and hi > lo");
    Histogram h;
    h.width = (hi - lo) / static_cast<double>(bins);
    h.counts.assign(bins, 0.0);
    h.centers.resize(bins);
    h.below = 0;
    h.above = 0;
    for (std::size_t b = 0; b < bins; ++b) h.centers[b] = lo + (static_cast<double>(b) + 0.5) * h.width;
    for (double v : values) {
        if (v < lo) {
            ++h.below;
        } else if (v >= hi) {
            ++h.above;
        } else {
            const auto b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / h.width));
            h.counts[b] += 1.0;
        }
    }
    return h;
}

ScalingFit scaling_exponent(std::vector<std::pair<double, double>> points, std::size_t skip_smallest) {
    for (const auto& [n, v] : points) {
        if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(n) || !std::isfinite(v)) {
            throw ValidationError("scaling fit needs positive finite n and values");
        }
    }
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].first == points[i - 1].first) throw ValidationError("scaling fit needs distinct n");
    }
    if (points.size() < skip_smallest + 4) {
        std::ostringstream msg;
        msg << "scaling fit needs at least 4 points after skipping " << skip_smallest << ", got " << points.size();
        throw ValidationError(msg.str());
    }
    points.erase(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(skip_smallest));
    const double m = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (const auto& [n, v] : points) {
        sx += std::log(n);
        sy += std::log(v);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [n, v] : points) {
        const double dx = std::log(n) - mx, dy = std::log(v) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.prefactor = std::exp(my - fit.exponent * mx);
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.points_used = points.size();
    return fit;
}

namespace {

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* params) {
    return (*static_cast<const std::function<double(double)>*>(params))(x);
}

} // namespace

QuadratureResult adaptive_quadrature(const std::function<double(double)>& f, double a, double b, double tol,
                                     std::size_t max_intervals) {
    if (!(tol > 0.0)) throw ValidationError("quadrature tolerance must be positive");
    if (a == b) return {0.0, 0.0, true};
    gsl_set_error_handler_off();
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(gsl_integration_workspace_alloc(max_intervals));
    gsl_function fn;
    fn.function = &trampoline;
    fn.params = const_cast<std::function<double(double)>*>(&f);
    double value = 0.0, err = 0.0;
    const int status =
        gsl_integration_qag(&fn, a, b, tol, 0.0, max_intervals, GSL_INTEG_GAUSS21, ws.get(), &value, &err);
    return {value, err, status == GSL_SUCCESS && err <= tol};
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol, std::size_t max_intervals) {
    const QuadratureResult r = adaptive_quadrature(f, a, b, tol, max_intervals);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "quadrature on [" << a << ", " << b << "] did not reach tolerance " << tol << " (estimate "
            << r.value << ", achieved " << r.error_estimate << ")";
        throw NumericalError(msg.str());
    }
    return r.value;
}

} // namespace qpe
