#pragma once

#include "qpe/linalg.hpp"

namespace qpe {

//! Reduces an angle to (-pi, pi].
double reduce_angle(double theta);

struct ChannelParams {
    ChannelParams(double theta, double p);

    double theta; //!< in (-pi, pi]
    double p;     //!< dephasing probability in [0, 1]
};

//! p(n) = epsilon / n.
struct NoiseSchedule {
    explicit NoiseSchedule(double epsilon);

    double p(long n) const;

    double epsilon;
};

//! U_theta = diag(e^{i theta/2}, e^{-i theta/2}).
ComplexMatrix phase_unitary(double theta);

DensityMatrix apply_channel(const ChannelParams& params, const DensityMatrix& rho);

//! (1-p)^m |Psi_{theta,m}><Psi_{theta,m}| + (1-(1-p)^m) I/2, the state after m
//! sequential uses on |+>.
DensityMatrix sequential_output(const ChannelParams& params, int m);
ComplexMatrix sequential_output_derivative(const ChannelParams& params, int m);

//! n-qubit GHZ probe after n parallel uses, in the {|0..0>, |1..1>} block.
DensityMatrix ghz_parallel_output(const ChannelParams& params, int n);
ComplexMatrix ghz_parallel_output_derivative(const ChannelParams& params, int n);

//! Choi matrix (input factor first, Tr C = 2) and its theta-derivative.
struct ChoiPair {
    ComplexMatrix c;
    ComplexMatrix d;
};

ChoiPair choi_matrix(const ChannelParams& params);

} // namespace qpe
