#pragma once

#include "lipmrac/fwdmodel.hpp"
#include "lipmrac/lipnet.hpp"
#include "lipmrac/sysmodel.hpp"
#include "lipmrac/trace.hpp"

#include <deque>
#include <functional>
#include <memory>

namespace lipmrac {

// Ideal input adjustment when the plant is white-box:
//   du = (F_m(x_m) - F_a(x_a) + G_m(x_m) u) / G_a(x_a) - u.
// Serves as the known-dynamics oracle for the learned adjustment.
double ideal_adjustment(const Plant& plant, const ReferenceModel& reference, const Vector& x_a,
                        const Vector& x_m, double u, double io_probe = 1e-3,
                        double g_min = 1e-9);

enum class UpdateMode { Predictive, Delayed };

struct AdaptationConfig {
    double learning_rate = 33.0;
    UpdateMode mode = UpdateMode::Predictive;
    // Use H = 1 and let the learning rate absorb the constant input-output
    // gradient of a linear plant.
    bool fold_h_into_rate = false;
    BlrConfig blr;
    // Updates larger than this are clamped for uncertified networks only.
    // Large enough that genuine blow-ups reach the plant's divergence flag
    // first; it only stops the parameters from overflowing to inf.
    double baseline_update_clamp = 1e9;
};

/// Online MRAC engine for one scalar-output axis. Owns the network, the
/// forward-model posterior and the r-step buffers. Per step the caller
/// invokes, in order: begin_step (measured outputs), decide (input split),
/// finish_step (learning), then advances the plant and calls record_applied.
class MracEngine {
   public:
    // Replaces the BLR prediction path; receives (x_a, y_a, u_a).
    using Predictor = std::function<BlrPrediction(const Vector&, double, double)>;

    MracEngine(std::unique_ptr<Network> network, AdaptationConfig config, int relative_degree);

    MracEngine(const MracEngine& other);
    MracEngine& operator=(const MracEngine&) = delete;
    MracEngine(MracEngine&&) = default;
    MracEngine& operator=(MracEngine&&) = default;

    // Matures the forward-model sample from step k-r and applies any
    // pending delayed update with the freshly measured error.
    void begin_step(double y_a, double y_m);

    struct Decision {
        double du = 0.0;
        double u_a = 0.0;
    };

    // xi = [x_a; x_m; u]; du = T(xi); u_a = u + du. Records xi and the
    // parameter gradient for the subsequent learn step.
    Decision decide(const Vector& x_a, const Vector& x_m, double u);

    // Learning for the decision just made. In predictive mode (with a
    // confident forward model) the update uses the predicted future output;
    // otherwise the decision is queued and applied r steps later from
    // measured data.
    void finish_step(double y_m_future);

    // The input actually applied to the plant this step (pairs with the
    // output measured r steps later).
    void record_applied(double u_applied);

    // Direct update law delta = lambda * h * G * e with the most recently
    // recorded gradient; e = y_m_future - y_a_future_or_pred.
    void learn_step(double y_m_future, double y_a_future_or_pred, double h);

    void set_predictor(Predictor predictor) { predictor_ = std::move(predictor); }

    const Network& network() const { return *network_; }
    Network& network() { return *network_; }
    const BlrModel& forward_model() const { return blr_; }
    const AdaptationConfig& config() const { return config_; }
    int relative_degree() const { return relative_degree_; }
    int skipped_updates() const { return skipped_updates_; }
    int steps() const { return step_; }
    const Vector& last_gradient() const { return last_gradient_; }

   private:
    void apply_learn(const Vector& gradient, double h, double e);
    BlrPrediction predict(const Vector& x_a, double y_a, double u_a) const;

    struct PendingUpdate {
        int decided_at = 0;
        Vector gradient;
        double h = 0.0;
    };

    std::unique_ptr<Network> network_;
    AdaptationConfig config_;
    int relative_degree_ = 1;
    BlrModel blr_;
    Predictor predictor_;

    int step_ = 0;
    int skipped_updates_ = 0;
    std::deque<PendingUpdate> pending_;
    std::deque<double> y_history_;   // measured outputs, most recent last
    std::deque<double> u_history_;   // applied inputs
    Vector last_gradient_;
    Vector current_x_a_;
    double current_y_a_ = 0.0;
    double current_y_m_ = 0.0;
    bool decision_open_ = false;
    double current_u_a_ = 0.0;
};

// How the input adjustment du is produced in a closed-loop run.
enum class AdjustmentSource { Network, IdealLaw, None };

struct ClosedLoopOptions {
    double sample_time = 0.01;
    AdjustmentSource source = AdjustmentSource::Network;
    double blow_up_norm = 1e6;  // plant state norm beyond which the run is flagged diverged
    Vector x_a0;                // default zero
    Vector x_m0;
    double io_probe = 1e-3;     // probe for the ideal-law io map
};

// Drives the interconnection for `horizon` steps: advance the reference
// with u_k, split the input, advance the plant with u_a + disturbance, and
// learn per the engine mode. `engine` may be null unless source==Network.
SimTrace run_closed_loop(const Interconnection& interconnection, MracEngine* engine,
                         const std::function<double(int)>& input, int horizon,
                         const ClosedLoopOptions& options);

}  // namespace lipmrac
