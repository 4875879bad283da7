#pragma once

#include <functional>

#include "qpe/channel.hpp"
#include "qpe/linalg.hpp"

namespace qpe {

//! A density matrix together with its theta-derivative.
struct StateFamilyPoint {
    StateFamilyPoint(const DensityMatrix& rho, ComplexMatrix drho);

    ComplexMatrix rho;
    ComplexMatrix drho; //!< Hermitian, traceless
};

enum class Derivative { Analytic, FiniteDifference };

//! Central difference (f(theta+h) - f(theta-h)) / 2h.
ComplexMatrix central_difference(const std::function<ComplexMatrix(double)>& family, double theta, double h);

StateFamilyPoint ghz_family_point(const ChannelParams& params, int n, Derivative mode = Derivative::Analytic,
                                  double h = 1e-5);
StateFamilyPoint sequential_family_point(const ChannelParams& params, int m, Derivative mode = Derivative::Analytic,
                                         double h = 1e-5);

//! SLD Fisher information in the eigenbasis of rho, restricted to pairs whose
//! eigenvalue sum is above the support cutoff.
double sld_qfi(const StateFamilyPoint& point);

//! An RLD information that is either finite or provably unbounded.
class RldValue {
  public:
    static RldValue finite(double v) { return RldValue(false, v); }
    static RldValue unbounded() { return RldValue(true, 0.0); }

    bool is_unbounded() const { return unbounded_; }
    //! Throws NumericalError when unbounded.
    double value() const;

  private:
    RldValue(bool unbounded, double v) : unbounded_(unbounded), value_(v) {}
    bool unbounded_;
    double value_;
};

//! Tr(drho rho^{-1} drho) of a single state family; unbounded when drho leaks
//! outside the support of rho.
RldValue rld_state_qfi(const StateFamilyPoint& point);

//! 2(1-p)^2 / (p(2-p)); unbounded at p = 0.
RldValue rld_channel_qfi_closed(double p);

//! ||Tr_out D C^+ D|| for a Choi pair with the input factor first.
RldValue rld_from_choi(const ComplexMatrix& c, const ComplexMatrix& d, int dim_in, int dim_out);

RldValue rld_channel_qfi_numeric(const ChannelParams& params);

//! Choi pair of two parallel uses, ordered (in1, in2, out1, out2), with the
//! product-rule derivative D x C + C x D.
ChoiPair two_use_choi(const ChannelParams& params);

//! n times the closed-form single-use RLD information.
RldValue n_use_rld_bound(double p, long n);

//! m^2 (1-p)^{2m}.
double sequential_sld_qfi(double p, int m);

//! n^2 (1-p)^{2n}; the GHZ family has the same closed form.
double ghz_sld_qfi(double p, int n);

} // namespace qpe
