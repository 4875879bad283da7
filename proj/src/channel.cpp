#include "qpe/channel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qpe/errors.hpp"

namespace qpe {

namespace {

constexpr double pi = std::numbers::pi;
const cplx I_unit(0.0, 1.0);

// 1/2 [[1, e^{i phi}], [e^{-i phi}, 1]]
ComplexMatrix equatorial_projector(double phi) {
    ComplexMatrix m(2, 2);
    m << 0.5, 0.5 * std::polar(1.0, phi), 0.5 * std::polar(1.0, -phi), 0.5;
    return m;
}

ComplexMatrix equatorial_projector_derivative(double phi, double dphi_dtheta) {
    ComplexMatrix m(2, 2);
    m << 0.0, 0.5 * I_unit * dphi_dtheta * std::polar(1.0, phi), -0.5 * I_unit * dphi_dtheta * std::polar(1.0, -phi),
        0.0;
    return m;
}

ComplexMatrix dephased_mixture(double phi, double coherence) {
    return coherence * equatorial_projector(phi) + (1.0 - coherence) * 0.5 * ComplexMatrix::Identity(2, 2);
}

void require_positive(int m, const char* what) {
    if (m < 1) {
        std::ostringstream msg;
        msg << what << " must be >= 1, got " << m;
        throw ValidationError(msg.str());
    }
}

} // namespace

double reduce_angle(double theta) {
    if (!std::isfinite(theta)) throw ValidationError("angle must be finite");
    double r = std::remainder(theta, 2.0 * pi); // [-pi, pi]
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

ChannelParams::ChannelParams(double theta_in, double p_in) : theta(reduce_angle(theta_in)), p(p_in) {
    if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "dephasing probability must lie in [0, 1], got " << p_in;
        throw ValidationError(msg.str());
    }
}

NoiseSchedule::NoiseSchedule(double eps) : epsilon(eps) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("epsilon must be finite and >= 0");
}

double NoiseSchedule::p(long n) const {
    if (n < 1) throw ValidationError("schedule needs n >= 1");
    const double value = epsilon / static_cast<double>(n);
    if (value > 1.0) {
        std::ostringstream msg;
        msg << "schedule p = epsilon/n = " << value << " exceeds 1 (n < epsilon)";
        throw ValidationError(msg.str());
    }
    return value;
}

ComplexMatrix phase_unitary(double theta) {
    ComplexMatrix u = ComplexMatrix::Zero(2, 2);
    u(0, 0) = std::polar(1.0, theta / 2.0);
    u(1, 1) = std::polar(1.0, -theta / 2.0);
    return u;
}

DensityMatrix apply_channel(const ChannelParams& params, const DensityMatrix& rho) {
    if (rho.dim() != 2) throw ValidationError("apply_channel acts on a single qubit");
    const ComplexMatrix u = phase_unitary(params.theta);
    const ComplexMatrix& r = rho.matrix();
    ComplexMatrix pinched = ComplexMatrix::Zero(2, 2);
    pinched(0, 0) = r(0, 0);
    pinched(1, 1) = r(1, 1);
    return DensityMatrix((1.0 - params.p) * u * r * u.adjoint() + params.p * pinched);
}

DensityMatrix sequential_output(const ChannelParams& params, int m) {
    require_positive(m, "number of sequential uses");
    return DensityMatrix(dephased_mixture(m * params.theta, std::pow(1.0 - params.p, m)));
}

ComplexMatrix sequential_output_derivative(const ChannelParams& params, int m) {
    require_positive(m, "number of sequential uses");
    return std::pow(1.0 - params.p, m) * equatorial_projector_derivative(m * params.theta, m);
}

// The GHZ block state has the same form as the sequential one: the coherence
// between |0..0> and |1..1> picks up phase n*theta and shrinks by (1-p)^n.
DensityMatrix ghz_parallel_output(const ChannelParams& params, int n) {
    require_positive(n, "number of parallel uses");
    return DensityMatrix(dephased_mixture(n * params.theta, std::pow(1.0 - params.p, n)));
}

ComplexMatrix ghz_parallel_output_derivative(const ChannelParams& params, int n) {
    require_positive(n, "number of parallel uses");
    return std::pow(1.0 - params.p, n) * equatorial_projector_derivative(n * params.theta, n);
}

ChoiPair choi_matrix(const ChannelParams& params) {
    const double s = 1.0 / std::sqrt(2.0);
    const double t = params.theta;
    ComplexVector phi = ComplexVector::Zero(4);
    phi(0) = s * std::polar(1.0, t / 2.0);
    phi(3) = s * std::polar(1.0, -t / 2.0);
    ComplexVector phi_perp = ComplexVector::Zero(4);
    phi_perp(0) = I_unit * s * std::polar(1.0, t / 2.0);
    phi_perp(3) = -I_unit * s * std::polar(1.0, -t / 2.0);

    ChoiPair out;
    out.c = (2.0 - params.p) * phi * phi.adjoint() + params.p * phi_perp * phi_perp.adjoint();
    out.d = (1.0 - params.p) * (phi_perp * phi.adjoint() + phi * phi_perp.adjoint());
    return out;
}

} // namespace qpe
