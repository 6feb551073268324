#include "lipmrac/stability.hpp"

#include "lipmrac/random.hpp"

#include <cmath>
#include <stdexcept>

namespace lipmrac {

GainEstimate estimate_gain(std::span<const Trajectory> trajectories, double margin) {
    if (margin < 1.0) {
        throw std::invalid_argument("estimate_gain: margin must be >= 1");
    }
    double beta_hat = 0.0;
    bool any_excited = false;
    for (const Trajectory& traj : trajectories) {
        if (traj.input_l2() == 0.0) {
            beta_hat = std::max(beta_hat, traj.state_l2());
        }
    }
    double worst_ratio = 0.0;
    for (const Trajectory& traj : trajectories) {
        const double input_energy = traj.input_l2();
        if (input_energy == 0.0) {
            continue;
        }
        any_excited = true;
        worst_ratio = std::max(worst_ratio, (traj.state_l2() - beta_hat) / input_energy);
    }
    if (!any_excited) {
        throw std::invalid_argument("estimate_gain: unexcited data (all trajectories have zero input energy)");
    }
    const double gamma_hat = margin * worst_ratio;
    if (!(gamma_hat > 0.0)) {
        throw std::runtime_error("estimate_gain: degenerate gain estimate (states carry no input response)");
    }
    return GainEstimate{gamma_hat, beta_hat, GainProvenance::DataEstimated, margin};
}

std::vector<Trajectory> excitation_battery(const ControlAffineSystem& system, double sample_time,
                                           int horizon, std::uint64_t seed, int num_frequencies,
                                           double omega_min, double omega_max, double amplitude) {
    if (num_frequencies < 1 || omega_min <= 0.0 || omega_max < omega_min) {
        throw std::invalid_argument("excitation_battery: bad frequency grid");
    }
    std::vector<Trajectory> battery;
    const Vector x0 = Vector::Zero(system.state_dim);
    for (int i = 0; i < num_frequencies; ++i) {
        const double f = num_frequencies == 1
                             ? omega_min
                             : omega_min * std::pow(omega_max / omega_min,
                                                    static_cast<double>(i) / (num_frequencies - 1));
        battery.push_back(simulate_open_loop(
            system, x0, [=](int k) { return amplitude * std::sin(f * k * sample_time); }, horizon));
    }
    std::mt19937_64 rng(derive_seed(seed, 0x7062u));
    std::vector<double> prbs(static_cast<std::size_t>(horizon));
    for (double& v : prbs) {
        v = (rng() & 1u) ? amplitude : -amplitude;
    }
    battery.push_back(simulate_open_loop(
        system, x0, [prbs](int k) { return prbs[static_cast<std::size_t>(k)]; }, horizon));
    return battery;
}

Certificate small_gain_check(double lipschitz, double gamma) {
    if (!(lipschitz > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("small_gain_check: L and gamma must be > 0");
    }
    Certificate cert;
    cert.lipschitz = lipschitz;
    cert.gamma = gamma;
    cert.slack = 1.0 / gamma - lipschitz;
    cert.status = lipschitz < 1.0 / gamma ? CertStatus::Certified : CertStatus::Violated;
    return cert;
}

StateBoundReport verify_state_bound(const SimTrace& trace, const GainEstimate& gain,
                                    double lipschitz) {
    if (trace.diverged) {
        throw std::invalid_argument("verify_state_bound: trace is flagged diverged");
    }
    const Certificate cert = small_gain_check(lipschitz, gain.gamma);
    if (!cert.certified()) {
        throw std::invalid_argument(
            "verify_state_bound: uncertified configuration (1 - gamma*L <= 0, bound undefined)");
    }
    StateBoundReport report;
    report.state_l2 = trace.state_l2();
    report.input_l2 = trace.input_l2();
    report.ref_state_l2 = trace.ref_state_l2();
    report.lhs = report.state_l2;
    report.rhs = (gain.gamma * (1.0 + lipschitz) * report.input_l2 +
                  gain.gamma * lipschitz * report.ref_state_l2 + gain.beta) /
                 (1.0 - gain.gamma * lipschitz);
    report.pass = report.lhs <= report.rhs;
    return report;
}

std::string to_string(CertStatus status) {
    return status == CertStatus::Certified ? "CERTIFIED" : "VIOLATED";
}

std::string to_string(GainProvenance provenance) {
    return provenance == GainProvenance::UserSupplied ? "USER_SUPPLIED" : "DATA_ESTIMATED";
}

}  // namespace lipmrac
