#pragma once

// Every numerical threshold used by the library lives here.

namespace qpe::tol {

inline constexpr double hermitian = 1e-10;
inline constexpr double density_hermitian = 1e-12;
inline constexpr double trace = 1e-12;
inline constexpr double norm = 1e-12;
inline constexpr double min_eigenvalue = -1e-10;
inline constexpr double eig_reconstruction = 1e-9;
inline constexpr double eig_orthonormality = 1e-10;

// Relative to the largest eigenvalue; below this an eigenvalue is treated as zero.
inline constexpr double support_cutoff = 1e-12;
inline constexpr double sld_support_leak = 1e-8;

inline constexpr double default_fd_step = 1e-5;

inline constexpr double profile_norm = 1e-6;
inline constexpr double dirichlet = 1e-6;
inline constexpr double parseval = 1e-3;
// Branch densities carry profile kinks, so their tails decay more slowly.
inline constexpr double noisy_window_mass = 2e-3;

inline constexpr double poisson_tail = 1e-8;
inline constexpr double branch_polynomial_floor = -1e-12;

// Distance from the pole of the noisy limiting integrand below which the
// integrand is replaced by its finite limit.
inline constexpr double pole_exclusion = 1e-9;

} // namespace qpe::tol
