#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lipmrac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// Closed-form description of a linear system x+ = Ax + Bu, y = Cx.
struct LinearForm {
    Matrix A;
    Vector B;
    RowVector C;
};

/// Discrete-time control-affine SISO system:
///   x_{k+1} = f(x_k) + g(x_k) u_k,   y_k = h(x_k).
/// Immutable description; simulation state is owned by the caller.
struct ControlAffineSystem {
    std::string name;
    int state_dim = 0;
    int relative_degree = 1;
    std::function<Vector(const Vector&)> drift;       // f(x)
    std::function<Vector(const Vector&)> input_gain;  // g(x)
    std::function<double(const Vector&)> output_map;  // h(x)
    std::optional<LinearForm> linear;                 // set when A/B/C are known

    Vector step(const Vector& x, double u) const { return drift(x) + input_gain(x) * u; }
    double output(const Vector& x) const { return output_map(x); }
};

using Plant = ControlAffineSystem;
using ReferenceModel = ControlAffineSystem;

double spectral_radius(const Matrix& A);

ControlAffineSystem make_linear_system(std::string name, Matrix A, Vector B, RowVector C);

// Same as make_linear_system but additionally requires spectral_radius(A) < 1,
// since reference models must be stable.
ReferenceModel make_linear_reference(std::string name, Matrix A, Vector B, RowVector C);

struct StepResult {
    Vector x_next;
    double y;  // output at the pre-step state, y_k = h(x_k)
};

// One plant transition. Rejects non-finite state/input with a diagnostic
// naming the offending entry.
StepResult plant_step(const Plant& plant, const Vector& x, double u);

// Input-output map coefficients at x for a system of relative degree r:
//   y_{k+r} = F(x_k) + G(x_k) u_k
// with F = h o f^r and G = d y_{k+r} / d u_k. Linear systems use the closed
// forms C A^r x and C A^{r-1} B; otherwise G comes from a central difference
// of the r-fold step composition with probe step `probe`.
struct IoCoefficients {
    double F = 0.0;
    double G = 0.0;
};

IoCoefficients io_map_coefficients(const ControlAffineSystem& system, const Vector& x,
                                   double probe = 1e-3, double g_min = 1e-9);

// Relative degree from data: a unit input step from x0 against a zero-input
// baseline; returns the first step index where the outputs separate by more
// than noise_floor. Throws if nothing separates within the horizon.
int estimate_relative_degree(const ControlAffineSystem& system, const Vector& x0,
                             double noise_floor = 1e-9, int horizon = 100);

struct Trajectory {
    std::vector<Vector> states;
    std::vector<double> inputs;

    double state_l2() const;  // sqrt(sum_k |x_k|^2)
    double input_l2() const;
};

Trajectory simulate_open_loop(const ControlAffineSystem& system, const Vector& x0,
                              const std::function<double(int)>& input, int horizon);

// Additive disturbances standing in for physical wind/tap tests. Each term
// contributes offset + amplitude*sin(omega*k + phase) on [start_step, end_step).
enum class DisturbanceTarget { Input, State };

struct DisturbanceTerm {
    DisturbanceTarget target = DisturbanceTarget::Input;
    int state_index = 0;  // only for State targets
    int start_step = 0;
    int end_step = std::numeric_limits<int>::max();
    double offset = 0.0;
    double amplitude = 0.0;
    double omega = 0.0;  // radians per step
    double phase = 0.0;

    double value_at(int k) const;
};

struct DisturbanceSchedule {
    std::vector<DisturbanceTerm> terms;

    bool empty() const { return terms.empty(); }
    double input_at(int k) const;
    Vector state_at(int k, int state_dim) const;
};

// The input-splitting interconnection: u_a = u + du goes to the plant,
// u_m = u goes to the reference model. The adaptation engine producing du
// is passed alongside (see adaptation.hpp).
struct Interconnection {
    Plant plant;
    ReferenceModel reference;
    DisturbanceSchedule disturbances;
};

}  // namespace lipmrac
