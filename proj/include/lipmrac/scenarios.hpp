#pragma once

#include "lipmrac/adaptation.hpp"
#include "lipmrac/control.hpp"
#include "lipmrac/stability.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lipmrac {

enum class NetworkKind { LipNet, Baseline };
enum class TaskKind { Hover, Circle };

// Sum of sinusoids plus a constant offset, evaluated at t = k * sample_time.
struct OpenLoopSignal {
    struct Term {
        double amplitude = 0.0;
        double omega = 0.0;  // rad/s
        double phase = 0.0;
        bool cosine = false;
    };
    std::vector<Term> terms;
    double offset = 0.0;

    double at(int k, double sample_time) const;
};

struct AdaptationSpec {
    NetworkKind kind = NetworkKind::LipNet;
    double lipschitz = 0.89;
    double learning_rate = 33.0;
    UpdateMode mode = UpdateMode::Predictive;
    bool fold_h_into_rate = false;
    int depth = 3;
    int width = 20;
    int group_size = 0;  // full sort
    BlrConfig blr;
};

// One scalar-output MRAC axis: plant, reference, open-loop test input.
struct ScalarAxis {
    std::string label;
    Plant plant;
    ReferenceModel reference;
    OpenLoopSignal input;
    DisturbanceSchedule disturbances;
};

struct ReferenceAccelParams {
    double alpha_x = 0.35;
    double beta_x = 0.65;
    double alpha_y = 0.35;
    double beta_y = 0.65;
};

// Simulated flying inverted pendulum: planar point-mass pendulum on a
// vehicle with decoupled x/y acceleration axes. The vehicle's true
// acceleration dynamics are a first-order lag with non-unit gain and a
// state-dependent input-gain warp -- the model-reality gap the adaptation
// has to bridge.
struct QuadPendSpec {
    TaskKind task = TaskKind::Hover;
    double circle_radius = 0.25;  // m
    double circle_rate = 1.25;    // rad/s
    ReferenceAccelParams tau;
    double pendulum_length = 0.5;  // m
    double gravity = 9.81;
    double surrogate_pole = 0.86;
    double surrogate_dc_gain = 0.55;
    double surrogate_input_warp = 0.20;
    double initial_pendulum_offset = 0.05;  // applied to both r and s, m
    double lqr_state_weight = 1.0;          // Q = w*I
    double lqr_input_weight = 1.0;          // R = w*I
};

struct Scenario {
    std::string name;
    double sample_time = 0.01;
    int horizon = 1000;
    std::vector<std::uint64_t> seeds;
    double gamma = 1.12;  // plant gain bound backing the certificate
    double beta = 0.0;
    GainProvenance gamma_provenance = GainProvenance::UserSupplied;
    AdaptationSpec adaptation;
    // Scenario-wide additive disturbances (wind-style); applied on top of
    // any per-axis schedule, unseen by the adaptation engine.
    DisturbanceSchedule disturbances;
    std::vector<ScalarAxis> axes;      // scalar runs
    std::optional<QuadPendSpec> quad;  // or the closed-loop pendulum task

    GainEstimate gain_estimate() const {
        return GainEstimate{gamma, beta, gamma_provenance, 1.0};
    }
};

// Planar point-mass pendulum on an accelerating vehicle, one axis.
// State [p, v, r, rdot]; r is the pendulum mass position relative to the
// vehicle, upright at r = 0. Forward Euler at `sample_time`; control-affine
// in the vehicle acceleration.
Vector quad_pend_axis_step(const Vector& state, double accel, double sample_time,
                           double pendulum_length, double gravity);

// Systems used by the scenario definitions.
Plant make_sim_example_plant(double sample_time = 0.01);
ReferenceModel make_sim_example_reference(double sample_time = 0.01);
// Hidden true acceleration dynamics for one axis:
//   a+ = pole*a + dc_gain*(1-pole)*(1 + warp*(cos a - 1))*u.
// |g| <= dc_gain*(1-pole) everywhere, so dc_gain bounds the l2 gain.
Plant make_accel_surrogate(std::string name, double pole, double dc_gain, double warp);
ReferenceModel make_accel_reference(std::string name, double alpha, double beta_pole);

// The single-axis simulation study: nonlinear plant vs linear reference,
// LipNet with L = 0.89 certified against gamma = 1.12, learning rate 33,
// two-tone test input, 10 s horizon, 10 seeds.
Scenario scenario_sim_example();

// Learning-rate sweep across network kinds over the sim example setup.
std::vector<Scenario> scenario_learning_rate_sweep(
    const std::vector<double>& rates = {1.0, 3.3, 10.0, 33.0, 100.0, 330.0, 1000.0},
    const std::vector<NetworkKind>& kinds = {NetworkKind::LipNet, NetworkKind::Baseline});

// Flying inverted pendulum with per-axis LipNets (L = 0.8, lambda = 0.8)
// and an outer LQR designed on the extended model. Refuses uncertified
// L/gamma combinations.
Scenario scenario_flying_pendulum(TaskKind task, double circle_radius = 0.25,
                                  double circle_rate = 1.25);

// `count` scenarios with randomly sampled reference parameters tau_m
// (poles in (0,1), gains in (0,1]); each reports the output mismatch
// between the adapted plant and its reference.
std::vector<Scenario> scenario_reference_sampling(int count, std::uint64_t seed);

struct AxisResult {
    std::string label;
    SimTrace trace;
    int skipped_updates = 0;
};

struct QuadPendLog {
    std::vector<double> t;
    std::vector<double> quad_error_x;  // vehicle position error
    std::vector<double> quad_error_y;
    std::vector<double> pend_r;  // pendulum relative positions
    std::vector<double> pend_s;

    double rms_quad_error() const;
    double rms_pendulum_error() const;
    // max(|r|, |s|) over the trailing `fraction` of the run
    double max_pendulum_error_tail(double fraction) const;
};

struct RunResult {
    std::vector<AxisResult> axes;
    std::optional<QuadPendLog> quad;
    Certificate certificate;
    bool certificate_gated = false;  // true when the LipNet gate applied
    bool diverged = false;
    std::vector<StateBoundReport> bound_reports;  // per axis, certified non-diverged runs
    std::vector<Vector> lqr_gains;                // per axis, outer-loop designs only

    double rms_output_error() const;  // across all axes
};

// Runs one (scenario, seed) trial. The certificate gate runs before any
// plant step. `source` selects the adjustment path: Network (default),
// IdealLaw (white-box oracle) or None (no-adaptation baseline).
RunResult execute_scenario(const Scenario& scenario, std::uint64_t seed,
                           AdjustmentSource source = AdjustmentSource::Network);

std::unique_ptr<Network> make_network(const AdaptationSpec& spec, int input_dim,
                                      std::uint64_t seed, std::uint64_t stream = 0);

std::string to_string(NetworkKind kind);
std::string to_string(TaskKind task);

}  // namespace lipmrac
