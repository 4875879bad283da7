#include "qpe/curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpe/errors.hpp"

namespace qpe {

namespace {

void require_increasing(const std::vector<double>& grid, const char* what) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw ValidationError(std::string(what) + " contains a non-finite value");
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ValidationError(std::string(what) + " is not strictly increasing");
        }
    }
}

} // namespace

double trapezoid(const std::vector<double>& grid, const std::vector<double>& values) {
    if (grid.size() != values.size()) throw ValidationError("trapezoid: grid and values differ in length");
    double sum = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) sum += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return sum;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) throw ValidationError("linspace needs count >= 2 and hi > lo");
    std::vector<double> out(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

DensityCurve::DensityCurve(std::vector<double> grid, std::vector<double> density)
    : grid_(std::move(grid)), density_(std::move(density)) {
    if (grid_.size() != density_.size() || grid_.size() < 2) {
        throw ValidationError("density curve needs matching grid and density of length >= 2");
    }
    require_increasing(grid_, "density grid");
    for (double d : density_) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("density must be finite and nonnegative");
    }
    normalization_ = trapezoid(grid_, density_);
}

TabulatedCdf::TabulatedCdf(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (grid_.size() != values_.size() || grid_.empty()) {
        throw ValidationError("CDF table needs matching, nonempty grid and values");
    }
    require_increasing(grid_, "CDF grid");
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] < values_[i - 1]) {
            std::ostringstream msg;
            msg << "reference CDF is not monotone at x = " << grid_[i];
            throw ValidationError(msg.str());
        }
    }
}

TabulatedCdf TabulatedCdf::from_density(const DensityCurve& curve, double left_mass) {
    std::vector<double> cdf(curve.size());
    cdf[0] = left_mass;
    const auto& g = curve.grid();
    const auto& d = curve.density();
    for (std::size_t i = 1; i < g.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (d[i] + d[i - 1]) * (g[i] - g[i - 1]);
    return TabulatedCdf(g, std::move(cdf));
}

double TabulatedCdf::operator()(double x) const {
    if (x <= grid_.front()) return values_.front();
    if (x >= grid_.back()) return values_.back();
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    const double w = (x - grid_[i - 1]) / (grid_[i] - grid_[i - 1]);
    return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

} // namespace qpe
