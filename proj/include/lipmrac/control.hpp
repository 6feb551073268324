#pragma once

#include "lipmrac/sysmodel.hpp"

namespace lipmrac {

/// Infinite-horizon discrete LQR solution for x+ = Ax + Bu with control
/// convention u = -K xi_tilde.
struct LqrDesign {
    Matrix A;
    Matrix B;
    Matrix Q;
    Matrix R;
    Matrix P;  // Riccati fixed point, symmetric PSD
    Matrix K;
    double riccati_residual = 0.0;
    double closed_loop_spectral_radius = 0.0;
};

// Iterates the Riccati difference equation to a fixed point (tol 1e-12,
// capped iterations) and returns K = (R + B^T P B)^{-1} B^T P A. Throws on
// non-convergence ("unstabilizable or ill-conditioned pair").
LqrDesign lqr_design(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     double tol = 1e-12, int max_iters = 100000);

/// Plant-state block stacked with the reference acceleration model: the
/// input enters only through the reference block.
///   A_ext = [A_x  B_x; 0  A_m],  B_ext = [0; B_m]
struct ExtendedModel {
    Matrix A;
    Matrix B;
    int plant_dim = 0;
    int accel_dim = 0;
};

struct LinearizedBlock {
    Matrix A;  // n x n state block
    Matrix B;  // n x m coupling to the acceleration states
};

ExtendedModel build_extended_model(const LinearizedBlock& plant, const Matrix& ref_A,
                                   const Matrix& ref_B);

// Central finite-difference linearization of a step map about (x0, u0).
LinearizedBlock linearize_step_map(
    const std::function<Vector(const Vector&, const Vector&)>& step, const Vector& x0,
    const Vector& u0, double probe = 1e-6);

struct AttitudeCommand {
    double pitch = 0.0;  // theta_c
    double roll = 0.0;   // phi_c
};

// Euler-parameterized acceleration-to-attitude transform:
//   theta_c = atan(u_x / g),  phi_c = atan(-u_y / sqrt(u_x^2 + g^2)).
AttitudeCommand attitude_from_accel(double u_x, double u_y, double gravity = 9.81);

}  // namespace lipmrac
