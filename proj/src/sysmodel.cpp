#include "lipmrac/sysmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace lipmrac {

double spectral_radius(const Matrix& A) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("spectral_radius: matrix must be square");
    }
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

ControlAffineSystem make_linear_system(std::string name, Matrix A, Vector B, RowVector C) {
    const auto n = A.rows();
    if (A.cols() != n || B.size() != n || C.size() != n) {
        throw std::invalid_argument("make_linear_system: inconsistent A/B/C dimensions for '" +
                                    name + "'");
    }
    if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
        throw std::invalid_argument("make_linear_system: non-finite entries in '" + name + "'");
    }
    ControlAffineSystem sys;
    sys.name = std::move(name);
    sys.state_dim = static_cast<int>(n);
    sys.linear = LinearForm{A, B, C};
    sys.drift = [A](const Vector& x) { return Vector(A * x); };
    sys.input_gain = [B](const Vector&) { return B; };
    sys.output_map = [C](const Vector& x) { return double(C * x); };
    return sys;
}

ReferenceModel make_linear_reference(std::string name, Matrix A, Vector B, RowVector C) {
    const double rho = spectral_radius(A);
    if (rho >= 1.0) {
        throw std::invalid_argument("make_linear_reference: '" + name +
                                    "' is unstable (spectral radius " + std::to_string(rho) + ")");
    }
    return make_linear_system(std::move(name), std::move(A), std::move(B), std::move(C));
}

StepResult plant_step(const Plant& plant, const Vector& x, double u) {
    if (x.size() != plant.state_dim) {
        throw std::invalid_argument("plant_step: state has " + std::to_string(x.size()) +
                                    " entries, expected " + std::to_string(plant.state_dim));
    }
    for (int i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw std::invalid_argument("plant_step: non-finite state entry at index " +
                                        std::to_string(i));
        }
    }
    if (!std::isfinite(u)) {
        throw std::invalid_argument("plant_step: non-finite input");
    }
    return StepResult{plant.step(x, u), plant.output(x)};
}

namespace {

// y_{k+r} as a function of u_k: one forced step, then r-1 unforced steps.
double output_after_r_steps(const ControlAffineSystem& system, const Vector& x, double u) {
    Vector state = system.step(x, u);
    for (int i = 1; i < system.relative_degree; ++i) {
        state = system.drift(state);
    }
    return system.output(state);
}

}  // namespace

IoCoefficients io_map_coefficients(const ControlAffineSystem& system, const Vector& x,
                                   double probe, double g_min) {
    if (system.relative_degree < 1) {
        throw std::invalid_argument("io_map_coefficients: relative degree must be >= 1");
    }
    IoCoefficients io;
    if (system.linear) {
        const LinearForm& lin = *system.linear;
        RowVector CAr = lin.C;
        for (int i = 0; i < system.relative_degree - 1; ++i) {
            CAr = CAr * lin.A;
        }
        io.G = CAr * lin.B;       // C A^{r-1} B
        io.F = (CAr * lin.A) * x;  // C A^r x
    } else {
        io.F = output_after_r_steps(system, x, 0.0);
        io.G = (output_after_r_steps(system, x, probe) -
                output_after_r_steps(system, x, -probe)) /
               (2.0 * probe);
    }
    if (std::abs(io.G) < g_min) {
        throw std::domain_error("io_map_coefficients: ill-defined relative degree at x for '" +
                                system.name + "' (|G| = " + std::to_string(std::abs(io.G)) + ")");
    }
    return io;
}

int estimate_relative_degree(const ControlAffineSystem& system, const Vector& x0,
                             double noise_floor, int horizon) {
    if (noise_floor < 0.0) {
        throw std::invalid_argument("estimate_relative_degree: noise_floor must be >= 0");
    }
    Vector x_base = x0;
    Vector x_step = x0;
    for (int k = 0; k <= horizon; ++k) {
        const double delta = std::abs(system.output(x_step) - system.output(x_base));
        if (delta > noise_floor) {
            return k;
        }
        x_base = system.step(x_base, 0.0);
        x_step = system.step(x_step, 1.0);
    }
    throw std::runtime_error("estimate_relative_degree: relative degree undetectable within " +
                             std::to_string(horizon) + " steps for '" + system.name + "'");
}

double Trajectory::state_l2() const {
    double acc = 0.0;
    for (const Vector& x : states) {
        acc += x.squaredNorm();
    }
    return std::sqrt(acc);
}

double Trajectory::input_l2() const {
    double acc = 0.0;
    for (double u : inputs) {
        acc += u * u;
    }
    return std::sqrt(acc);
}

Trajectory simulate_open_loop(const ControlAffineSystem& system, const Vector& x0,
                              const std::function<double(int)>& input, int horizon) {
    Trajectory traj;
    traj.states.reserve(static_cast<std::size_t>(horizon));
    traj.inputs.reserve(static_cast<std::size_t>(horizon));
    Vector x = x0;
    for (int k = 0; k < horizon; ++k) {
        const double u = input(k);
        traj.states.push_back(x);
        traj.inputs.push_back(u);
        x = system.step(x, u);
    }
    return traj;
}

double DisturbanceTerm::value_at(int k) const {
    if (k < start_step || k >= end_step) {
        return 0.0;
    }
    return offset + amplitude * std::sin(omega * k + phase);
}

double DisturbanceSchedule::input_at(int k) const {
    double value = 0.0;
    for (const DisturbanceTerm& term : terms) {
        if (term.target == DisturbanceTarget::Input) {
            value += term.value_at(k);
        }
    }
    return value;
}

Vector DisturbanceSchedule::state_at(int k, int state_dim) const {
    Vector value = Vector::Zero(state_dim);
    for (const DisturbanceTerm& term : terms) {
        if (term.target == DisturbanceTarget::State) {
            if (term.state_index < 0 || term.state_index >= state_dim) {
                throw std::out_of_range("DisturbanceSchedule: state index out of range");
            }
            value[term.state_index] += term.value_at(k);
        }
    }
    return value;
}

}  // namespace lipmrac
