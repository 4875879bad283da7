#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qpe {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

//! Eigenvalues in descending order; eigenvectors are the matching columns.
struct EigenSystem {
    RealVector values;
    ComplexMatrix vectors;
};

//! Largest entrywise |M - M^dagger|.
double max_asymmetry(const ComplexMatrix& m);

//! Throws ValidationError naming `what` when m is not Hermitian within tol.
void require_hermitian(const ComplexMatrix& m, double tol, const char* what);

EigenSystem hermitian_eig(const ComplexMatrix& m);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

enum class Keep { A, B };

ComplexMatrix partial_trace(const ComplexMatrix& m, int dim_a, int dim_b, Keep keep);

//! Reorders tensor factors: factor i of the result is factor perm[i] of m.
ComplexMatrix permute_subsystems(const ComplexMatrix& m, const std::vector<int>& dims,
                                 const std::vector<int>& perm);

//! Largest absolute eigenvalue of a Hermitian matrix.
double operator_norm(const ComplexMatrix& m);

//! Inverse on the span of eigenvectors whose eigenvalue exceeds
//! relative_cutoff times the largest eigenvalue magnitude.
ComplexMatrix pseudo_inverse_on_support(const ComplexMatrix& m, double relative_cutoff);

class PureState {
  public:
    explicit PureState(ComplexVector amplitudes);

    const ComplexVector& amplitudes() const { return amplitudes_; }
    int dim() const { return static_cast<int>(amplitudes_.size()); }

  private:
    ComplexVector amplitudes_;
};

class DensityMatrix {
  public:
    explicit DensityMatrix(ComplexMatrix matrix);
    static DensityMatrix from_pure(const PureState& psi);

    const ComplexMatrix& matrix() const { return matrix_; }
    int dim() const { return static_cast<int>(matrix_.rows()); }

  private:
    ComplexMatrix matrix_;
};

} // namespace qpe
