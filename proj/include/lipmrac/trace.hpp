#pragma once

#include "lipmrac/sysmodel.hpp"

#include <cstddef>
#include <vector>

namespace lipmrac {

/// Time-indexed record of one closed-loop run. One entry per step k:
/// states before the step, the input split u_a = u + du, outputs at the
/// pre-step states and the tracking error e = y_m - y_a.
struct SimTrace {
    double sample_time = 0.0;
    bool diverged = false;
    int divergence_step = -1;

    std::vector<double> t;
    std::vector<Vector> x_a;
    std::vector<Vector> x_m;
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> u_a;
    std::vector<double> y_a;
    std::vector<double> y_m;
    std::vector<double> e;

    std::size_t size() const { return t.size(); }

    double rms_output_error() const;
    // RMS(e) over the trailing `fraction` of the horizon (0 < fraction <= 1).
    double rms_output_error_tail(double fraction) const;
    // RMS(e) over the leading `fraction`.
    double rms_output_error_head(double fraction) const;

    // Truncated l2 signal norms used by the small-gain state bound.
    double state_l2() const;
    double input_l2() const;
    double ref_state_l2() const;
};

}  // namespace lipmrac
