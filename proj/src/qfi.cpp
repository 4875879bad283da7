#include "qpe/qfi.hpp"

#include <cmath>
#include <sstream>

#include "qpe/errors.hpp"
#include "qpe/tolerances.hpp"

namespace qpe {

StateFamilyPoint::StateFamilyPoint(const DensityMatrix& rho_in, ComplexMatrix drho_in)
    : rho(rho_in.matrix()), drho(std::move(drho_in)) {
    if (drho.rows() != rho.rows() || drho.cols() != rho.cols()) {
        throw ValidationError("derivative and state dimensions differ");
    }
    require_hermitian(drho, tol::hermitian, "state derivative");
    const double tr = std::abs(drho.trace());
    if (tr > tol::hermitian) {
        std::ostringstream msg;
        msg << "state derivative has trace " << tr << ", expected 0";
        throw ValidationError(msg.str());
    }
}

ComplexMatrix central_difference(const std::function<ComplexMatrix(double)>& family, double theta, double h) {
    if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
    return (family(theta + h) - family(theta - h)) / (2.0 * h);
}

namespace {

StateFamilyPoint family_point(const ChannelParams& params, int count, Derivative mode, double h,
                              DensityMatrix (*state)(const ChannelParams&, int),
                              ComplexMatrix (*derivative)(const ChannelParams&, int)) {
    const DensityMatrix rho = state(params, count);
    if (mode == Derivative::Analytic) return StateFamilyPoint(rho, derivative(params, count));
    const double p = params.p;
    auto family = [&](double theta) { return state(ChannelParams(theta, p), count).matrix(); };
    return StateFamilyPoint(rho, central_difference(family, params.theta, h));
}

} // namespace

StateFamilyPoint ghz_family_point(const ChannelParams& params, int n, Derivative mode, double h) {
    return family_point(params, n, mode, h, &ghz_parallel_output, &ghz_parallel_output_derivative);
}

StateFamilyPoint sequential_family_point(const ChannelParams& params, int m, Derivative mode, double h) {
    return family_point(params, m, mode, h, &sequential_output, &sequential_output_derivative);
}

double sld_qfi(const StateFamilyPoint& point) {
    const EigenSystem es = hermitian_eig(point.rho);
    const ComplexMatrix d = es.vectors.adjoint() * point.drho * es.vectors;
    const double cutoff = tol::support_cutoff * std::max(es.values(0), 0.0);
    double j = 0.0;
    for (Eigen::Index a = 0; a < d.rows(); ++a) {
        for (Eigen::Index b = 0; b < d.cols(); ++b) {
            const double s = es.values(a) + es.values(b);
            if (s > cutoff) {
                j += 2.0 * std::norm(d(a, b)) / s;
            } else if (std::abs(d(a, b)) > tol::sld_support_leak) {
                std::ostringstream msg;
                msg << "derivative component " << std::abs(d(a, b))
                    << " lies outside the joint support of the state; no SLD exists";
                throw ValidationError(msg.str());
            }
        }
    }
    return j;
}

double RldValue::value() const {
    if (unbounded_) throw NumericalError("RLD information is unbounded");
    return value_;
}

namespace {

// Component of d that leaves the support of an operator with eigensystem es.
double support_leak(const EigenSystem& es, const ComplexMatrix& d, double cutoff) {
    const Eigen::Index dim = d.rows();
    ComplexMatrix proj = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (es.values(i) > cutoff) proj += es.vectors.col(i) * es.vectors.col(i).adjoint();
    }
    const ComplexMatrix outside = (ComplexMatrix::Identity(dim, dim) - proj) * d;
    return dim == 0 ? 0.0 : outside.cwiseAbs().maxCoeff();
}

} // namespace

RldValue rld_state_qfi(const StateFamilyPoint& point) {
    const EigenSystem es = hermitian_eig(point.rho);
    const double cutoff = tol::support_cutoff * es.values(0);
    if (support_leak(es, point.drho, cutoff) > tol::sld_support_leak) return RldValue::unbounded();
    const ComplexMatrix inv = pseudo_inverse_on_support(point.rho, tol::support_cutoff);
    return RldValue::finite((point.drho * inv * point.drho).trace().real());
}

RldValue rld_channel_qfi_closed(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing probability must lie in [0, 1]");
    if (p == 0.0) return RldValue::unbounded();
    return RldValue::finite(2.0 * (1.0 - p) * (1.0 - p) / (p * (2.0 - p)));
}

RldValue rld_from_choi(const ComplexMatrix& c, const ComplexMatrix& d, int dim_in, int dim_out) {
    const EigenSystem es = hermitian_eig(c);
    if (es.values(es.values.size() - 1) < tol::min_eigenvalue) {
        throw ValidationError("Choi matrix is not positive semidefinite");
    }
    const double cutoff = tol::support_cutoff * es.values(0);
    if (support_leak(es, d, cutoff) > tol::sld_support_leak) return RldValue::unbounded();
    const ComplexMatrix inv = pseudo_inverse_on_support(c, tol::support_cutoff);
    const ComplexMatrix reduced = partial_trace(d * inv * d, dim_in, dim_out, Keep::A);
    return RldValue::finite(operator_norm(0.5 * (reduced + reduced.adjoint())));
}

RldValue rld_channel_qfi_numeric(const ChannelParams& params) {
    const ChoiPair choi = choi_matrix(params);
    return rld_from_choi(choi.c, choi.d, 2, 2);
}

ChoiPair two_use_choi(const ChannelParams& params) {
    const ChoiPair one = choi_matrix(params);
    // kron gives the order (in1, out1, in2, out2); move outputs last.
    const std::vector<int> dims{2, 2, 2, 2};
    const std::vector<int> perm{0, 2, 1, 3};
    ChoiPair out;
    out.c = permute_subsystems(kron(one.c, one.c), dims, perm);
    out.d = permute_subsystems(kron(one.d, one.c) + kron(one.c, one.d), dims, perm);
    return out;
}

RldValue n_use_rld_bound(double p, long n) {
    if (n < 1) throw ValidationError("number of uses must be >= 1");
    const RldValue single = rld_channel_qfi_closed(p);
    if (single.is_unbounded()) return single;
    return RldValue::finite(static_cast<double>(n) * single.value());
}

double sequential_sld_qfi(double p, int m) {
    if (m < 1) throw ValidationError("number of uses must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("dephasing probability must lie in [0, 1]");
    const double mm = m;
    return mm * mm * std::pow(1.0 - p, 2.0 * mm);
}

double ghz_sld_qfi(double p, int n) { return sequential_sld_qfi(p, n); }

} // namespace qpe
