#pragma once

#include <vector>

namespace qpe {

//! A sampled density on a strictly increasing grid. `normalization` is the
//! trapezoid integral of the samples.
class DensityCurve {
  public:
    DensityCurve(std::vector<double> grid, std::vector<double> density);

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    double normalization() const { return normalization_; }
    std::size_t size() const { return grid_.size(); }

  private:
    std::vector<double> grid_;
    std::vector<double> density_;
    double normalization_;
};

//! Trapezoid integral of samples on a grid.
double trapezoid(const std::vector<double>& grid, const std::vector<double>& values);

//! `count` equally spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t count);

//! Piecewise-linear CDF through monotone nodes; constant beyond the ends.
class TabulatedCdf {
  public:
    TabulatedCdf(std::vector<double> grid, std::vector<double> values);

    //! Cumulative trapezoid of a density, starting from `left_mass`.
    static TabulatedCdf from_density(const DensityCurve& curve, double left_mass = 0.0);

    double operator()(double x) const;
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }

  private:
    std::vector<double> grid_;
    std::vector<double> values_;
};

} // namespace qpe
