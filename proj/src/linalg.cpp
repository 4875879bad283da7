#include "qpe/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qpe/errors.hpp"
#include "qpe/tolerances.hpp"

namespace qpe {

double max_asymmetry(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        throw ValidationError("matrix is not square");
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

void require_hermitian(const ComplexMatrix& m, double tol, const char* what) {
    const double asym = m.size() == 0 ? 0.0 : max_asymmetry(m);
    if (asym > tol) {
        std::ostringstream msg;
        msg << what << " is not Hermitian: max |M - M^dagger| = " << asym << " exceeds " << tol;
        throw ValidationError(msg.str());
    }
}

EigenSystem hermitian_eig(const ComplexMatrix& m) {
    require_hermitian(m, tol::hermitian, "eigendecomposition input");
    const ComplexMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("Hermitian eigensolver did not converge");
    }
    const Eigen::Index d = h.rows();
    EigenSystem out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();

    const ComplexMatrix recon = out.vectors * out.values.cast<cplx>().asDiagonal() * out.vectors.adjoint();
    const double recon_err = d == 0 ? 0.0 : (recon - m).cwiseAbs().maxCoeff();
    const double ortho_err =
        d == 0 ? 0.0
               : (out.vectors.adjoint() * out.vectors - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (recon_err > tol::eig_reconstruction || ortho_err > tol::eig_orthonormality) {
        std::ostringstream msg;
        msg << "eigendecomposition failed its contract: reconstruction " << recon_err << ", orthonormality "
            << ortho_err;
        throw NumericalError(msg.str());
    }
    return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, int dim_a, int dim_b, Keep keep) {
    if (dim_a <= 0 || dim_b <= 0 || m.rows() != m.cols() || m.rows() != Eigen::Index(dim_a) * dim_b) {
        std::ostringstream msg;
        msg << "partial_trace: matrix of size " << m.rows() << "x" << m.cols() << " does not match dims ("
            << dim_a << ", " << dim_b << ")";
        throw ValidationError(msg.str());
    }
    if (keep == Keep::A) {
        ComplexMatrix out = ComplexMatrix::Zero(dim_a, dim_a);
        for (int i = 0; i < dim_a; ++i)
            for (int k = 0; k < dim_a; ++k)
                for (int j = 0; j < dim_b; ++j)
                    out(i, k) += m(i * dim_b + j, k * dim_b + j);
        return out;
    }
    ComplexMatrix out = ComplexMatrix::Zero(dim_b, dim_b);
    for (int i = 0; i < dim_a; ++i)
        for (int j = 0; j < dim_b; ++j)
            for (int l = 0; l < dim_b; ++l)
                out(j, l) += m(i * dim_b + j, i * dim_b + l);
    return out;
}

namespace {

std::vector<int> digits_of(Eigen::Index index, const std::vector<int>& dims) {
    std::vector<int> digits(dims.size());
    for (std::size_t f = dims.size(); f-- > 0;) {
        digits[f] = static_cast<int>(index % dims[f]);
        index /= dims[f];
    }
    return digits;
}

} // namespace

ComplexMatrix permute_subsystems(const ComplexMatrix& m, const std::vector<int>& dims,
                                 const std::vector<int>& perm) {
    if (dims.size() != perm.size()) {
        throw ValidationError("permute_subsystems: dims and perm differ in length");
    }
    Eigen::Index total = 1;
    for (int d : dims) {
        if (d <= 0) throw ValidationError("permute_subsystems: nonpositive factor dimension");
        total *= d;
    }
    if (m.rows() != total || m.cols() != total) {
        throw ValidationError("permute_subsystems: matrix size does not match dims");
    }
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] != static_cast<int>(i)) throw ValidationError("permute_subsystems: perm is not a permutation");
    }
    std::vector<int> new_dims(dims.size());
    for (std::size_t i = 0; i < perm.size(); ++i) new_dims[i] = dims[perm[i]];

    // Map each old basis index to its position in the permuted ordering.
    std::vector<Eigen::Index> target(total);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        const std::vector<int> old_digits = digits_of(idx, dims);
        Eigen::Index t = 0;
        for (std::size_t i = 0; i < perm.size(); ++i) t = t * new_dims[i] + old_digits[perm[i]];
        target[idx] = t;
    }
    ComplexMatrix out(total, total);
    for (Eigen::Index r = 0; r < total; ++r)
        for (Eigen::Index c = 0; c < total; ++c)
            out(target[r], target[c]) = m(r, c);
    return out;
}

double operator_norm(const ComplexMatrix& m) {
    const EigenSystem es = hermitian_eig(m);
    return es.values.size() == 0 ? 0.0 : es.values.cwiseAbs().maxCoeff();
}

ComplexMatrix pseudo_inverse_on_support(const ComplexMatrix& m, double relative_cutoff) {
    const EigenSystem es = hermitian_eig(m);
    const Eigen::Index d = m.rows();
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    if (d == 0) return out;
    const double scale = es.values.cwiseAbs().maxCoeff();
    const double threshold = relative_cutoff * scale;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(es.values(i)) > threshold && es.values(i) != 0.0) {
            out += (1.0 / es.values(i)) * es.vectors.col(i) * es.vectors.col(i).adjoint();
        }
    }
    return out;
}

PureState::PureState(ComplexVector amplitudes) : amplitudes_(std::move(amplitudes)) {
    const double n2 = amplitudes_.squaredNorm();
    if (amplitudes_.size() == 0 || std::abs(n2 - 1.0) > tol::norm) {
        std::ostringstream msg;
        msg << "pure state is not normalized: squared norm " << n2;
        throw ValidationError(msg.str());
    }
}

DensityMatrix::DensityMatrix(ComplexMatrix matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols()) {
        throw ValidationError("density matrix must be square and nonempty");
    }
    require_hermitian(matrix_, tol::density_hermitian, "density matrix");
    const double tr = matrix_.trace().real();
    if (std::abs(tr - 1.0) > tol::trace) {
        std::ostringstream msg;
        msg << "density matrix trace " << tr << " differs from 1";
        throw ValidationError(msg.str());
    }
    const ComplexMatrix h = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < tol::min_eigenvalue) {
        std::ostringstream msg;
        msg << "density matrix has negative eigenvalue " << solver.eigenvalues().minCoeff();
        throw ValidationError(msg.str());
    }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

} // namespace qpe
