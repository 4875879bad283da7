#pragma once

// Hand-rolled generators for the property tests. Every case is keyed by
// (seed, case index), so a failing case can be replayed on its own.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "qpe/covariant.hpp"
#include "qpe/linalg.hpp"
#include "qpe/rng.hpp"

namespace qpe::gen {

inline double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline int integer(CounterRng& rng, int lo, int hi) {
    return lo + static_cast<int>(std::floor(rng.uniform() * (hi - lo + 1)));
}

inline double normal(CounterRng& rng) {
    return std::sqrt(-2.0 * std::log(rng.uniform())) * std::cos(2.0 * std::numbers::pi * rng.uniform());
}

inline ComplexVector complex_vector(CounterRng& rng, int dim) {
    ComplexVector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = cplx(normal(rng), normal(rng));
    return v;
}

inline InputSpectrum spectrum(CounterRng& rng, int n) {
    ComplexVector v = complex_vector(rng, n + 1);
    return InputSpectrum(v / v.norm());
}

inline ComplexMatrix hermitian(CounterRng& rng, int dim) {
    ComplexMatrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cplx(normal(rng), normal(rng));
    return (g + g.adjoint()) / 2.0;
}

//! Full-rank with probability one: G G^dagger / Tr.
inline DensityMatrix density(CounterRng& rng, int dim) {
    ComplexMatrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cplx(normal(rng), normal(rng));
    ComplexMatrix r = g * g.adjoint();
    return DensityMatrix(r / r.trace().real());
}

} // namespace qpe::gen
