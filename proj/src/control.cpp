#include "lipmrac/control.hpp"

#include <cmath>
#include <stdexcept>

namespace lipmrac {

LqrDesign lqr_design(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     double tol, int max_iters) {
    const auto n = A.rows();
    const auto m = B.cols();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
        R.cols() != m) {
        throw std::invalid_argument("lqr_design: dimension mismatch");
    }
    {
        Eigen::SelfAdjointEigenSolver<Matrix> r_eigen(R);
        if (r_eigen.eigenvalues().minCoeff() <= 0.0) {
            throw std::invalid_argument("lqr_design: R must be positive definite");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> q_eigen(Q);
        if (q_eigen.eigenvalues().minCoeff() < -1e-12) {
            throw std::invalid_argument("lqr_design: Q must be positive semidefinite");
        }
    }

    Matrix P = Q;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
        const Matrix BtP = B.transpose() * P;
        const Matrix gain = (R + BtP * B).ldlt().solve(BtP * A);
        Matrix P_next = A.transpose() * P * A - A.transpose() * P * B * gain + Q;
        P_next = 0.5 * (P_next + P_next.transpose());
        const double delta = (P_next - P).cwiseAbs().maxCoeff();
        P = P_next;
        if (!P.allFinite()) {
            throw std::runtime_error("lqr_design: unstabilizable or ill-conditioned pair (diverged)");
        }
        if (delta < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw std::runtime_error("lqr_design: unstabilizable or ill-conditioned pair (no fixed point)");
    }

    LqrDesign design;
    design.A = A;
    design.B = B;
    design.Q = Q;
    design.R = R;
    design.P = P;
    const Matrix BtP = B.transpose() * P;
    design.K = (R + BtP * B).ldlt().solve(BtP * A);
    const Matrix residual =
        P - (A.transpose() * P * A - A.transpose() * P * B * design.K + Q);
    design.riccati_residual = residual.cwiseAbs().maxCoeff();
    design.closed_loop_spectral_radius = spectral_radius(A - B * design.K);
    return design;
}

ExtendedModel build_extended_model(const LinearizedBlock& plant, const Matrix& ref_A,
                                   const Matrix& ref_B) {
    const auto n = plant.A.rows();
    const auto m = ref_A.rows();
    if (plant.A.cols() != n || plant.B.rows() != n || plant.B.cols() != m || ref_A.cols() != m ||
        ref_B.rows() != m || ref_B.cols() != m) {
        throw std::invalid_argument("build_extended_model: dimension mismatch");
    }
    ExtendedModel ext;
    ext.plant_dim = static_cast<int>(n);
    ext.accel_dim = static_cast<int>(m);
    ext.A = Matrix::Zero(n + m, n + m);
    ext.A.topLeftCorner(n, n) = plant.A;
    ext.A.topRightCorner(n, m) = plant.B;
    ext.A.bottomRightCorner(m, m) = ref_A;
    ext.B = Matrix::Zero(n + m, m);
    ext.B.bottomRows(m) = ref_B;
    return ext;
}

LinearizedBlock linearize_step_map(
    const std::function<Vector(const Vector&, const Vector&)>& step, const Vector& x0,
    const Vector& u0, double probe) {
    const auto n = x0.size();
    const auto m = u0.size();
    LinearizedBlock block;
    block.A = Matrix::Zero(n, n);
    block.B = Matrix::Zero(n, m);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector xp = x0;
        Vector xm = x0;
        xp[j] += probe;
        xm[j] -= probe;
        block.A.col(j) = (step(xp, u0) - step(xm, u0)) / (2.0 * probe);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        Vector up = u0;
        Vector um = u0;
        up[j] += probe;
        um[j] -= probe;
        block.B.col(j) = (step(x0, up) - step(x0, um)) / (2.0 * probe);
    }
    return block;
}

AttitudeCommand attitude_from_accel(double u_x, double u_y, double gravity) {
    if (!std::isfinite(u_x) || !std::isfinite(u_y)) {
        throw std::invalid_argument("attitude_from_accel: non-finite acceleration command");
    }
    if (!(gravity > 0.0)) {
        throw std::invalid_argument("attitude_from_accel: gravity must be > 0");
    }
    AttitudeCommand cmd;
    cmd.pitch = std::atan(u_x / gravity);
    cmd.roll = std::atan(-u_y / std::sqrt(u_x * u_x + gravity * gravity));
    return cmd;
}

}  // namespace lipmrac
