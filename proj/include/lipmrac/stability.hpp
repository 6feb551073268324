#pragma once

#include "lipmrac/sysmodel.hpp"
#include "lipmrac/trace.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace lipmrac {

enum class GainProvenance { UserSupplied, DataEstimated };

/// Input-to-state gain bound |x_a|_l <= gamma |u_a|_l + beta over the
/// truncated l2 signal norm.
struct GainEstimate {
    double gamma = 0.0;
    double beta = 0.0;
    GainProvenance provenance = GainProvenance::UserSupplied;
    double margin = 1.0;
};

// Battery-max gain estimator: beta from zero-input trajectories, gamma from
// the worst excited ratio (|x|_l - beta)/|u|_l, inflated by the margin.
// Finite horizons under-approximate the true gain; the margin is the hedge.
GainEstimate estimate_gain(std::span<const Trajectory> trajectories, double margin = 1.2);

// Excitation battery for estimate_gain: sinusoids at `num_frequencies`
// log-spaced frequencies between omega_min and omega_max (rad/s) plus a
// +-1 PRBS sequence, all from the zero state.
std::vector<Trajectory> excitation_battery(const ControlAffineSystem& system, double sample_time,
                                           int horizon, std::uint64_t seed,
                                           int num_frequencies = 5, double omega_min = 0.2,
                                           double omega_max = 20.0, double amplitude = 1.0);

enum class CertStatus { Certified, Violated };

struct Certificate {
    CertStatus status = CertStatus::Violated;
    double slack = 0.0;  // 1/gamma - L
    double lipschitz = 0.0;
    double gamma = 0.0;

    bool certified() const { return status == CertStatus::Certified; }
};

// The small-gain condition: certified iff L < 1/gamma.
Certificate small_gain_check(double lipschitz, double gamma);

struct StateBoundReport {
    double lhs = 0.0;  // |x_a|_l
    double rhs = 0.0;  // (gamma(1+L)|u|_l + gamma L |x_m|_l + beta)/(1 - gamma L)
    bool pass = false;
    double state_l2 = 0.0;
    double input_l2 = 0.0;
    double ref_state_l2 = 0.0;
};

// Checks the certified-run state bound on a completed trace. Refuses
// uncertified configurations (the bound formula needs 1 - gamma L > 0)
// and diverged traces.
StateBoundReport verify_state_bound(const SimTrace& trace, const GainEstimate& gain,
                                    double lipschitz);

std::string to_string(CertStatus status);
std::string to_string(GainProvenance provenance);

}  // namespace lipmrac
