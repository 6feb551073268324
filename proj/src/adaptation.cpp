#include "lipmrac/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lipmrac {

namespace {

double rms_over(const std::vector<double>& values, std::size_t begin, std::size_t end) {
    if (end <= begin) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        acc += values[i] * values[i];
    }
    return std::sqrt(acc / static_cast<double>(end - begin));
}

}  // namespace

double SimTrace::rms_output_error() const { return rms_over(e, 0, e.size()); }

double SimTrace::rms_output_error_tail(double fraction) const {
    const auto n = e.size();
    const auto span = static_cast<std::size_t>(fraction * static_cast<double>(n));
    return rms_over(e, n - std::min(span, n), n);
}

double SimTrace::rms_output_error_head(double fraction) const {
    const auto n = e.size();
    const auto span = static_cast<std::size_t>(fraction * static_cast<double>(n));
    return rms_over(e, 0, std::min(span, n));
}

double SimTrace::state_l2() const {
    double acc = 0.0;
    for (const Vector& x : x_a) {
        acc += x.squaredNorm();
    }
    return std::sqrt(acc);
}

double SimTrace::input_l2() const {
    double acc = 0.0;
    for (double v : u) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

double SimTrace::ref_state_l2() const {
    double acc = 0.0;
    for (const Vector& x : x_m) {
        acc += x.squaredNorm();
    }
    return std::sqrt(acc);
}

double ideal_adjustment(const Plant& plant, const ReferenceModel& reference, const Vector& x_a,
                        const Vector& x_m, double u, double io_probe, double g_min) {
    const IoCoefficients plant_io = io_map_coefficients(plant, x_a, io_probe, g_min);
    const IoCoefficients ref_io = io_map_coefficients(reference, x_m, io_probe, g_min);
    if (std::abs(plant_io.G) <= g_min) {
        throw std::domain_error("ideal_adjustment: control-direction singularity (|G_a| <= g_min)");
    }
    return (ref_io.F - plant_io.F + ref_io.G * u) / plant_io.G - u;
}

MracEngine::MracEngine(std::unique_ptr<Network> network, AdaptationConfig config,
                       int relative_degree)
    : network_(std::move(network)),
      config_(config),
      relative_degree_(relative_degree),
      blr_(config.blr) {
    if (!network_) {
        throw std::invalid_argument("MracEngine: network must not be null");
    }
    if (relative_degree_ < 1) {
        throw std::invalid_argument("MracEngine: relative degree must be >= 1");
    }
    if (config_.learning_rate < 0.0) {
        throw std::invalid_argument("MracEngine: learning rate must be >= 0");
    }
}

MracEngine::MracEngine(const MracEngine& other)
    : network_(other.network_->clone()),
      config_(other.config_),
      relative_degree_(other.relative_degree_),
      blr_(other.blr_),
      predictor_(other.predictor_),
      step_(other.step_),
      skipped_updates_(other.skipped_updates_),
      pending_(other.pending_),
      y_history_(other.y_history_),
      u_history_(other.u_history_),
      last_gradient_(other.last_gradient_),
      current_x_a_(other.current_x_a_),
      current_y_a_(other.current_y_a_),
      current_y_m_(other.current_y_m_),
      decision_open_(other.decision_open_),
      current_u_a_(other.current_u_a_) {}

BlrPrediction MracEngine::predict(const Vector& x_a, double y_a, double u_a) const {
    if (predictor_) {
        return predictor_(x_a, y_a, u_a);
    }
    return blr_.predict(y_a, u_a);
}

void MracEngine::begin_step(double y_a, double y_m) {
    current_y_a_ = y_a;
    current_y_m_ = y_m;
    // The sample decided r steps ago matures now.
    if (static_cast<int>(y_history_.size()) >= relative_degree_ && std::isfinite(y_a)) {
        const std::size_t idx = y_history_.size() - static_cast<std::size_t>(relative_degree_);
        const double y_prev = y_history_[idx];
        const double u_prev = u_history_[idx];
        if (std::isfinite(y_prev) && std::isfinite(u_prev)) {
            blr_.update(y_prev, u_prev, y_a);
        }
    }
    while (!pending_.empty() && pending_.front().decided_at + relative_degree_ <= step_) {
        const PendingUpdate& update = pending_.front();
        apply_learn(update.gradient, update.h, y_m - y_a);
        pending_.pop_front();
    }
}

MracEngine::Decision MracEngine::decide(const Vector& x_a, const Vector& x_m, double u) {
    Vector xi(x_a.size() + x_m.size() + 1);
    xi << x_a, x_m, u;
    Decision decision;
    decision.du = network_->forward(xi);
    decision.u_a = u + decision.du;
    last_gradient_ = network_->parameter_gradient(xi);
    current_x_a_ = x_a;
    current_u_a_ = decision.u_a;
    decision_open_ = true;
    return decision;
}

void MracEngine::finish_step(double y_m_future) {
    if (!decision_open_) {
        throw std::logic_error("MracEngine::finish_step: no open decision");
    }
    decision_open_ = false;
    const BlrPrediction prediction = predict(current_x_a_, current_y_a_, current_u_a_);
    const double h = config_.fold_h_into_rate ? 1.0 : prediction.h;
    const bool predictive_ready =
        config_.mode == UpdateMode::Predictive && !prediction.low_confidence;
    if (predictive_ready) {
        apply_learn(last_gradient_, h, y_m_future - prediction.y_hat);
    } else {
        // r-step-delay fallback: gradient and gain recorded now, error
        // measured when the output arrives.
        pending_.push_back(PendingUpdate{step_, last_gradient_, h});
    }
    ++step_;
}

void MracEngine::record_applied(double u_applied) {
    y_history_.push_back(current_y_a_);
    u_history_.push_back(u_applied);
    const std::size_t keep = static_cast<std::size_t>(relative_degree_) + 1;
    while (y_history_.size() > keep) {
        y_history_.pop_front();
        u_history_.pop_front();
    }
}

void MracEngine::learn_step(double y_m_future, double y_a_future_or_pred, double h) {
    if (last_gradient_.size() == 0) {
        throw std::logic_error("MracEngine::learn_step: no recorded gradient");
    }
    apply_learn(last_gradient_, h, y_m_future - y_a_future_or_pred);
}

void MracEngine::apply_learn(const Vector& gradient, double h, double e) {
    if (!std::isfinite(e) || !std::isfinite(h)) {
        ++skipped_updates_;
        return;
    }
    Vector delta = (config_.learning_rate * h * e) * gradient;
    if (!delta.allFinite()) {
        ++skipped_updates_;
        return;
    }
    if (!network_->lipschitz_certified()) {
        const double norm = delta.norm();
        if (norm > config_.baseline_update_clamp) {
            delta *= config_.baseline_update_clamp / norm;
        }
    }
    network_->apply_update(delta);
}

SimTrace run_closed_loop(const Interconnection& interconnection, MracEngine* engine,
                         const std::function<double(int)>& input, int horizon,
                         const ClosedLoopOptions& options) {
    const Plant& plant = interconnection.plant;
    const ReferenceModel& reference = interconnection.reference;
    if (options.source == AdjustmentSource::Network && engine == nullptr) {
        throw std::invalid_argument("run_closed_loop: network source requires an engine");
    }
    if (horizon < plant.relative_degree) {
        throw std::invalid_argument("run_closed_loop: horizon must be >= relative degree");
    }

    SimTrace trace;
    trace.sample_time = options.sample_time;
    trace.t.reserve(static_cast<std::size_t>(horizon));

    Vector x_a = options.x_a0.size() ? options.x_a0 : Vector::Zero(plant.state_dim);
    Vector x_m = options.x_m0.size() ? options.x_m0 : Vector::Zero(reference.state_dim);
    const bool disturbed = !interconnection.disturbances.empty();

    for (int k = 0; k < horizon; ++k) {
        const double y_a = plant.output(x_a);
        const double y_m = reference.output(x_m);
        if (engine != nullptr && options.source == AdjustmentSource::Network) {
            engine->begin_step(y_a, y_m);
        }

        const double u = input(k);
        double du = 0.0;
        switch (options.source) {
            case AdjustmentSource::Network:
                du = engine->decide(x_a, x_m, u).du;
                break;
            case AdjustmentSource::IdealLaw:
                du = ideal_adjustment(plant, reference, x_a, x_m, u, options.io_probe);
                break;
            case AdjustmentSource::None:
                break;
        }
        const double u_a = u + du;

        if (engine != nullptr && options.source == AdjustmentSource::Network) {
            const IoCoefficients ref_io = io_map_coefficients(reference, x_m, options.io_probe);
            engine->finish_step(ref_io.F + ref_io.G * u);
        }

        trace.t.push_back(k * options.sample_time);
        trace.x_a.push_back(x_a);
        trace.x_m.push_back(x_m);
        trace.u.push_back(u);
        trace.du.push_back(du);
        trace.u_a.push_back(u_a);
        trace.y_a.push_back(y_a);
        trace.y_m.push_back(y_m);
        trace.e.push_back(y_m - y_a);

        // Disturbances reach the plant but not the adaptation engine's
        // records: the controller only knows what it commanded.
        const double u_applied =
            disturbed ? u_a + interconnection.disturbances.input_at(k) : u_a;
        x_m = reference.step(x_m, u);
        x_a = plant.step(x_a, u_applied);
        if (disturbed) {
            x_a += interconnection.disturbances.state_at(k, plant.state_dim);
        }
        if (engine != nullptr && options.source == AdjustmentSource::Network) {
            engine->record_applied(u_a);
        }

        if (!x_a.allFinite() || x_a.norm() > options.blow_up_norm) {
            trace.diverged = true;
            trace.divergence_step = k + 1;
            break;
        }
    }
    return trace;
}

}  // namespace lipmrac
