#pragma once

namespace qmode::kernels {

struct KernelConstants {
    double kappa;   //!< int t^2 K(t) dt
    double kappa1;  //!< int K'(t)^2 dt
};

//! Biweight kernel K(t) = 15/16 (1 - t^2)^2 on |t| < 1 and its derivatives up to order 3.
double biweight(double t, int order);

KernelConstants kernel_constants();

//! Value of K'' just inside the support edge, |t| -> 1-. K'' jumps from this value to 0.
inline constexpr double kSecondDerivativeEdge = 7.5;

}  // namespace qmode::kernels
