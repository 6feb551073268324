#include "lipmrac/scenarios.hpp"

#include "lipmrac/random.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace lipmrac {

namespace {

constexpr std::uint64_t kNetworkStream = 0x100;
constexpr std::uint64_t kSamplingStream = 0x200;

std::vector<std::uint64_t> default_seeds() { return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}; }

std::string format_rate(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    return buf;
}

}  // namespace

double OpenLoopSignal::at(int k, double sample_time) const {
    const double t = k * sample_time;
    double value = offset;
    for (const Term& term : terms) {
        const double arg = term.omega * t + term.phase;
        value += term.amplitude * (term.cosine ? std::cos(arg) : std::sin(arg));
    }
    return value;
}

Plant make_sim_example_plant(double sample_time) {
    const double T = sample_time;
    Matrix A(2, 2);
    A << 1.0, T, -T, 1.0 - T;
    Vector B(2);
    B << 0.0, 0.6 * T;
    Plant plant;
    plant.name = "sim-plant";
    plant.state_dim = 2;
    plant.relative_degree = 1;
    plant.drift = [A, T](const Vector& x) {
        Vector d(2);
        d << 0.1 * T * x[0] * std::sin(x[0]), 0.0;
        return Vector(A * x + d);
    };
    plant.input_gain = [B](const Vector&) { return B; };
    plant.output_map = [](const Vector& x) { return x[0] + x[1]; };
    return plant;
}

ReferenceModel make_sim_example_reference(double sample_time) {
    const double T = sample_time;
    Matrix A(2, 2);
    A << 1.0, T, -0.25 * T, 1.0 - T;
    Vector B(2);
    B << 0.0, T;
    RowVector C(2);
    C << 0.25, 0.25;
    return make_linear_reference("sim-reference", A, B, C);
}

Plant make_accel_surrogate(std::string name, double pole, double dc_gain, double warp) {
    if (!(pole >= 0.0) || !(pole < 1.0)) {
        throw std::invalid_argument("make_accel_surrogate: pole must be in [0, 1)");
    }
    const double gain_coeff = dc_gain * (1.0 - pole);
    Plant plant;
    plant.name = std::move(name);
    plant.state_dim = 1;
    plant.relative_degree = 1;
    plant.drift = [pole](const Vector& x) { return Vector(pole * x); };
    plant.input_gain = [gain_coeff, warp](const Vector& x) {
        Vector g(1);
        g << gain_coeff * (1.0 + warp * (std::cos(x[0]) - 1.0));
        return g;
    };
    plant.output_map = [](const Vector& x) { return x[0]; };
    return plant;
}

ReferenceModel make_accel_reference(std::string name, double alpha, double beta_pole) {
    Matrix A(1, 1);
    A << beta_pole;
    Vector B(1);
    B << alpha;
    RowVector C(1);
    C << 1.0;
    return make_linear_reference(std::move(name), A, B, C);
}

Scenario scenario_sim_example() {
    Scenario sc;
    sc.name = "sim-example";
    sc.sample_time = 0.01;
    sc.horizon = 1000;
    sc.seeds = default_seeds();
    sc.gamma = 1.12;
    sc.beta = 0.0;
    sc.gamma_provenance = GainProvenance::UserSupplied;
    sc.adaptation.kind = NetworkKind::LipNet;
    sc.adaptation.lipschitz = 0.89;
    sc.adaptation.learning_rate = 33.0;

    ScalarAxis axis;
    axis.label = "axis0";
    axis.plant = make_sim_example_plant(sc.sample_time);
    axis.reference = make_sim_example_reference(sc.sample_time);
    axis.input.terms.push_back({1.0, 2.0 * std::numbers::pi / 5.0, 0.0, false});
    axis.input.terms.push_back({5.0, 2.0 * std::numbers::pi / 3.0, 0.0, true});
    axis.input.offset = -5.0;
    sc.axes.push_back(std::move(axis));
    return sc;
}

std::vector<Scenario> scenario_learning_rate_sweep(const std::vector<double>& rates,
                                                   const std::vector<NetworkKind>& kinds) {
    if (rates.empty()) {
        throw std::invalid_argument("scenario_learning_rate_sweep: rates must be nonempty");
    }
    std::vector<Scenario> sweep;
    for (NetworkKind kind : kinds) {
        for (double rate : rates) {
            Scenario sc = scenario_sim_example();
            sc.name = "rate-sweep-" + to_string(kind) + "-lr" + format_rate(rate);
            sc.adaptation.kind = kind;
            sc.adaptation.learning_rate = rate;
            // The sweep axis is in tuning-parameter units: the plant's
            // near-constant input-output gradient is folded into the rate,
            // which is where the two architectures actually separate.
            sc.adaptation.fold_h_into_rate = true;
            sweep.push_back(std::move(sc));
        }
    }
    return sweep;
}

Scenario scenario_flying_pendulum(TaskKind task, double circle_radius, double circle_rate) {
    Scenario sc;
    sc.name = task == TaskKind::Hover ? "quad-hover" : "quad-circle";
    sc.sample_time = 0.02;  // 50 Hz command rate
    sc.horizon = 750;       // 15 s
    sc.seeds = default_seeds();
    sc.gamma = 0.68;
    sc.beta = 0.0;
    sc.gamma_provenance = GainProvenance::UserSupplied;
    sc.adaptation.kind = NetworkKind::LipNet;
    sc.adaptation.lipschitz = 0.8;
    sc.adaptation.learning_rate = 0.8;

    QuadPendSpec quad;
    quad.task = task;
    quad.circle_radius = circle_radius;
    quad.circle_rate = circle_rate;
    sc.quad = quad;

    if (!small_gain_check(sc.adaptation.lipschitz, sc.gamma).certified()) {
        throw std::runtime_error("scenario_flying_pendulum: uncertified L/gamma combination");
    }
    return sc;
}

std::vector<Scenario> scenario_reference_sampling(int count, std::uint64_t seed) {
    if (count < 1) {
        throw std::invalid_argument("scenario_reference_sampling: count must be >= 1");
    }
    std::mt19937_64 rng(derive_seed(seed, kSamplingStream));
    std::vector<Scenario> scenarios;
    for (int i = 0; i < count; ++i) {
        Scenario sc;
        sc.name = "reference-sampling-" + std::to_string(i);
        sc.sample_time = 0.02;
        sc.horizon = 1000;  // 20 s
        sc.seeds = default_seeds();
        sc.gamma = 0.68;
        sc.beta = 0.0;
        sc.gamma_provenance = GainProvenance::UserSupplied;
        sc.adaptation.kind = NetworkKind::LipNet;
        sc.adaptation.lipschitz = 0.8;
        sc.adaptation.learning_rate = 0.8;

        // tau_m per axis: stable poles, gains bounded away from zero so the
        // reference stays responsive.
        const double alpha_x = 0.2 + 0.8 * uniform01(rng);
        const double beta_x = 0.3 + 0.6 * uniform01(rng);
        const double alpha_y = 0.2 + 0.8 * uniform01(rng);
        const double beta_y = 0.3 + 0.6 * uniform01(rng);

        ScalarAxis axis_x;
        axis_x.label = "x";
        axis_x.plant = make_accel_surrogate("accel-x", 0.80, 0.68, 0.20);
        axis_x.reference = make_accel_reference("accel-ref-x", alpha_x, beta_x);
        axis_x.input.terms.push_back({1.2, 0.5, 0.0, false});
        axis_x.input.terms.push_back({0.8, 1.7, 0.0, true});
        sc.axes.push_back(std::move(axis_x));

        ScalarAxis axis_y;
        axis_y.label = "y";
        axis_y.plant = make_accel_surrogate("accel-y", 0.80, 0.68, 0.20);
        axis_y.reference = make_accel_reference("accel-ref-y", alpha_y, beta_y);
        axis_y.input.terms.push_back({1.0, 0.7, 0.0, false});
        axis_y.input.terms.push_back({0.9, 2.3, 0.4, true});
        sc.axes.push_back(std::move(axis_y));

        scenarios.push_back(std::move(sc));
    }
    return scenarios;
}

std::unique_ptr<Network> make_network(const AdaptationSpec& spec, int input_dim,
                                      std::uint64_t seed, std::uint64_t stream) {
    NetworkLayout layout;
    layout.input_dim = input_dim;
    layout.hidden_width = spec.width;
    layout.depth = spec.depth;
    layout.group_size = spec.group_size;
    layout.with_biases = false;
    std::mt19937_64 rng(derive_seed(seed, kNetworkStream + stream));
    if (spec.kind == NetworkKind::LipNet) {
        return std::make_unique<LipNet>(layout, spec.lipschitz, rng);
    }
    return std::make_unique<BaselineNet>(layout, rng);
}

double QuadPendLog::rms_quad_error() const {
    if (t.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += quad_error_x[i] * quad_error_x[i] + quad_error_y[i] * quad_error_y[i];
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
}

double QuadPendLog::rms_pendulum_error() const {
    if (t.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        acc += pend_r[i] * pend_r[i] + pend_s[i] * pend_s[i];
    }
    return std::sqrt(acc / static_cast<double>(t.size()));
}

double QuadPendLog::max_pendulum_error_tail(double fraction) const {
    const std::size_t n = t.size();
    const auto span = static_cast<std::size_t>(fraction * static_cast<double>(n));
    double worst = 0.0;
    for (std::size_t i = n - std::min(span, n); i < n; ++i) {
        worst = std::max(worst, std::max(std::abs(pend_r[i]), std::abs(pend_s[i])));
    }
    return worst;
}

double RunResult::rms_output_error() const {
    double acc = 0.0;
    std::size_t count = 0;
    for (const AxisResult& axis : axes) {
        for (double e : axis.trace.e) {
            acc += e * e;
        }
        count += axis.trace.e.size();
    }
    return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

Vector quad_pend_axis_step(const Vector& state, double accel, double sample_time,
                           double pendulum_length, double gravity) {
    const double T = sample_time;
    const double l2 = pendulum_length * pendulum_length;
    const double r = state[2];
    // The pendulum has fallen past horizontal once |r| -> l; clamp keeps the
    // arithmetic finite until the caller's divergence check trips.
    const double zeta2 = std::max(l2 - r * r, 1e-6 * l2);
    const double zeta = std::sqrt(zeta2);
    const double rddot =
        gravity * zeta * r / l2 - r * state[3] * state[3] / zeta2 - (zeta2 / l2) * accel;
    Vector next(4);
    next << state[0] + T * state[1], state[1] + T * accel, state[2] + T * state[3],
        state[3] + T * rddot;
    return next;
}

namespace {

struct AxisEngineSetup {
    Plant plant;
    ReferenceModel reference;
    std::optional<MracEngine> engine;
};

AxisEngineSetup make_quad_axis(const Scenario& sc, double alpha, double beta_pole,
                               const std::string& suffix, std::uint64_t seed,
                               std::uint64_t stream, bool with_engine) {
    const QuadPendSpec& quad = *sc.quad;
    AxisEngineSetup setup;
    setup.plant = make_accel_surrogate("accel-" + suffix, quad.surrogate_pole,
                                       quad.surrogate_dc_gain, quad.surrogate_input_warp);
    setup.reference = make_accel_reference("accel-ref-" + suffix, alpha, beta_pole);
    if (with_engine) {
        AdaptationConfig cfg;
        cfg.learning_rate = sc.adaptation.learning_rate;
        cfg.mode = sc.adaptation.mode;
        cfg.fold_h_into_rate = sc.adaptation.fold_h_into_rate;
        cfg.blr = sc.adaptation.blr;
        setup.engine.emplace(make_network(sc.adaptation, 3, seed, stream), cfg, 1);
    }
    return setup;
}

RunResult run_quad_scenario(const Scenario& sc, std::uint64_t seed, AdjustmentSource source) {
    const QuadPendSpec& quad = *sc.quad;
    const double T = sc.sample_time;
    const bool with_engine = source == AdjustmentSource::Network;

    AxisEngineSetup ax = make_quad_axis(sc, quad.tau.alpha_x, quad.tau.beta_x, "x", seed, 0, with_engine);
    AxisEngineSetup ay = make_quad_axis(sc, quad.tau.alpha_y, quad.tau.beta_y, "y", seed, 1, with_engine);

    // Outer LQR on the extended model: linearized vehicle-pendulum block
    // stacked with the per-axis reference acceleration model.
    const auto step_map = [&](const Vector& x, const Vector& u) {
        return quad_pend_axis_step(x, u[0], T, quad.pendulum_length, quad.gravity);
    };
    const LinearizedBlock block =
        linearize_step_map(step_map, Vector::Zero(4), Vector::Zero(1));
    const Matrix Q = quad.lqr_state_weight * Matrix::Identity(5, 5);
    const Matrix R = quad.lqr_input_weight * Matrix::Identity(1, 1);
    Matrix Am(1, 1), Bm(1, 1);
    Am << quad.tau.beta_x;
    Bm << quad.tau.alpha_x;
    const ExtendedModel ext_x = build_extended_model(block, Am, Bm);
    const LqrDesign lqr_x = lqr_design(ext_x.A, ext_x.B, Q, R);
    Am << quad.tau.beta_y;
    Bm << quad.tau.alpha_y;
    const ExtendedModel ext_y = build_extended_model(block, Am, Bm);
    const LqrDesign lqr_y = lqr_design(ext_y.A, ext_y.B, Q, R);
    const bool disturbed = !sc.disturbances.empty();

    Vector pos_x(4), pos_y(4);
    if (quad.task == TaskKind::Hover) {
        pos_x << 0.0, 0.0, quad.initial_pendulum_offset, 0.0;
        pos_y << 0.0, 0.0, quad.initial_pendulum_offset, 0.0;
    } else {
        pos_x << quad.circle_radius, 0.0, quad.initial_pendulum_offset, 0.0;
        pos_y << 0.0, quad.circle_radius * quad.circle_rate, quad.initial_pendulum_offset, 0.0;
    }
    double a_x = 0.0, a_y = 0.0;
    double am_x = 0.0, am_y = 0.0;

    RunResult result;
    result.axes.resize(2);
    result.axes[0].label = "x";
    result.axes[1].label = "y";
    SimTrace& trace_x = result.axes[0].trace;
    SimTrace& trace_y = result.axes[1].trace;
    trace_x.sample_time = T;
    trace_y.sample_time = T;
    result.quad = QuadPendLog{};
    QuadPendLog& log = *result.quad;

    Vector state_x(1), state_mx(1), state_y(1), state_my(1);
    for (int k = 0; k < sc.horizon; ++k) {
        const double t = k * T;
        if (with_engine) {
            ax.engine->begin_step(a_x, am_x);
            ay.engine->begin_step(a_y, am_y);
        }

        double pdes_x = 0.0, vdes_x = 0.0, pdes_y = 0.0, vdes_y = 0.0;
        if (quad.task == TaskKind::Circle) {
            pdes_x = quad.circle_radius * std::cos(quad.circle_rate * t);
            vdes_x = -quad.circle_radius * quad.circle_rate * std::sin(quad.circle_rate * t);
            pdes_y = quad.circle_radius * std::sin(quad.circle_rate * t);
            vdes_y = quad.circle_radius * quad.circle_rate * std::cos(quad.circle_rate * t);
        }

        Vector err_x(5), err_y(5);
        err_x << pos_x[0] - pdes_x, pos_x[1] - vdes_x, pos_x[2], pos_x[3], a_x;
        err_y << pos_y[0] - pdes_y, pos_y[1] - vdes_y, pos_y[2], pos_y[3], a_y;
        const double u_x = -(lqr_x.K * err_x)(0);
        const double u_y = -(lqr_y.K * err_y)(0);

        state_x << a_x;
        state_mx << am_x;
        state_y << a_y;
        state_my << am_y;
        double du_x = 0.0, du_y = 0.0;
        switch (source) {
            case AdjustmentSource::Network:
                du_x = ax.engine->decide(state_x, state_mx, u_x).du;
                du_y = ay.engine->decide(state_y, state_my, u_y).du;
                break;
            case AdjustmentSource::IdealLaw:
                du_x = ideal_adjustment(ax.plant, ax.reference, state_x, state_mx, u_x);
                du_y = ideal_adjustment(ay.plant, ay.reference, state_y, state_my, u_y);
                break;
            case AdjustmentSource::None:
                break;
        }
        const double ua_x = u_x + du_x;
        const double ua_y = u_y + du_y;
        if (with_engine) {
            ax.engine->finish_step(quad.tau.beta_x * am_x + quad.tau.alpha_x * u_x);
            ay.engine->finish_step(quad.tau.beta_y * am_y + quad.tau.alpha_y * u_y);
        }

        trace_x.t.push_back(t);
        trace_x.x_a.push_back(state_x);
        trace_x.x_m.push_back(state_mx);
        trace_x.u.push_back(u_x);
        trace_x.du.push_back(du_x);
        trace_x.u_a.push_back(ua_x);
        trace_x.y_a.push_back(a_x);
        trace_x.y_m.push_back(am_x);
        trace_x.e.push_back(am_x - a_x);
        trace_y.t.push_back(t);
        trace_y.x_a.push_back(state_y);
        trace_y.x_m.push_back(state_my);
        trace_y.u.push_back(u_y);
        trace_y.du.push_back(du_y);
        trace_y.u_a.push_back(ua_y);
        trace_y.y_a.push_back(a_y);
        trace_y.y_m.push_back(am_y);
        trace_y.e.push_back(am_y - a_y);
        log.t.push_back(t);
        log.quad_error_x.push_back(pos_x[0] - pdes_x);
        log.quad_error_y.push_back(pos_y[0] - pdes_y);
        log.pend_r.push_back(pos_x[2]);
        log.pend_s.push_back(pos_y[2]);

        // Advance everything from the step-k values. Wind-style disturbance
        // enters the true acceleration channel, unseen by the engines.
        const double gust = disturbed ? sc.disturbances.input_at(k) : 0.0;
        const Vector pos_x_next = quad_pend_axis_step(pos_x, a_x, T, quad.pendulum_length, quad.gravity);
        const Vector pos_y_next = quad_pend_axis_step(pos_y, a_y, T, quad.pendulum_length, quad.gravity);
        const double am_x_next = quad.tau.beta_x * am_x + quad.tau.alpha_x * u_x;
        const double am_y_next = quad.tau.beta_y * am_y + quad.tau.alpha_y * u_y;
        const double a_x_next = ax.plant.step(state_x, ua_x + gust)[0];
        const double a_y_next = ay.plant.step(state_y, ua_y + gust)[0];
        if (with_engine) {
            ax.engine->record_applied(ua_x);
            ay.engine->record_applied(ua_y);
        }
        pos_x = pos_x_next;
        pos_y = pos_y_next;
        am_x = am_x_next;
        am_y = am_y_next;
        a_x = a_x_next;
        a_y = a_y_next;

        const bool fell = std::abs(pos_x[2]) >= 0.995 * quad.pendulum_length ||
                          std::abs(pos_y[2]) >= 0.995 * quad.pendulum_length;
        const bool finite = pos_x.allFinite() && pos_y.allFinite() && std::isfinite(a_x) &&
                            std::isfinite(a_y);
        const bool blown = pos_x.norm() > 1e6 || pos_y.norm() > 1e6 ||
                           std::abs(a_x) > 1e6 || std::abs(a_y) > 1e6;
        if (fell || !finite || blown) {
            result.diverged = true;
            trace_x.diverged = true;
            trace_y.diverged = true;
            trace_x.divergence_step = k + 1;
            trace_y.divergence_step = k + 1;
            break;
        }
    }
    if (with_engine) {
        result.axes[0].skipped_updates = ax.engine->skipped_updates();
        result.axes[1].skipped_updates = ay.engine->skipped_updates();
    }
    result.lqr_gains.push_back(lqr_x.K.row(0).transpose());
    result.lqr_gains.push_back(lqr_y.K.row(0).transpose());
    return result;
}

RunResult run_scalar_scenario(const Scenario& sc, std::uint64_t seed, AdjustmentSource source) {
    RunResult result;
    std::uint64_t stream = 0;
    for (const ScalarAxis& axis : sc.axes) {
        std::optional<MracEngine> engine;
        if (source == AdjustmentSource::Network) {
            AdaptationConfig cfg;
            cfg.learning_rate = sc.adaptation.learning_rate;
            cfg.mode = sc.adaptation.mode;
            cfg.fold_h_into_rate = sc.adaptation.fold_h_into_rate;
            cfg.blr = sc.adaptation.blr;
            const int input_dim = axis.plant.state_dim + axis.reference.state_dim + 1;
            engine.emplace(make_network(sc.adaptation, input_dim, seed, stream), cfg,
                           axis.plant.relative_degree);
        }
        DisturbanceSchedule schedule = axis.disturbances;
        schedule.terms.insert(schedule.terms.end(), sc.disturbances.terms.begin(),
                              sc.disturbances.terms.end());
        Interconnection interconnection{axis.plant, axis.reference, schedule};
        ClosedLoopOptions options;
        options.sample_time = sc.sample_time;
        options.source = source;
        SimTrace trace = run_closed_loop(
            interconnection, engine ? &*engine : nullptr,
            [&axis, &sc](int k) { return axis.input.at(k, sc.sample_time); }, sc.horizon, options);
        AxisResult axis_result;
        axis_result.label = axis.label;
        axis_result.skipped_updates = engine ? engine->skipped_updates() : 0;
        axis_result.trace = std::move(trace);
        result.diverged = result.diverged || axis_result.trace.diverged;
        result.axes.push_back(std::move(axis_result));
        ++stream;
    }
    return result;
}

}  // namespace

RunResult execute_scenario(const Scenario& scenario, std::uint64_t seed, AdjustmentSource source) {
    if (scenario.axes.empty() == !scenario.quad.has_value()) {
        throw std::invalid_argument("execute_scenario: scenario must define either scalar axes or a quad task");
    }
    Certificate certificate;
    bool gated = false;
    if (source == AdjustmentSource::Network && scenario.adaptation.kind == NetworkKind::LipNet) {
        certificate = small_gain_check(scenario.adaptation.lipschitz, scenario.gamma);
        if (!certificate.certified()) {
            throw std::runtime_error("execute_scenario: certificate gate refused the run (L = " +
                                     std::to_string(scenario.adaptation.lipschitz) +
                                     " >= 1/gamma, gamma = " + std::to_string(scenario.gamma) + ")");
        }
        gated = true;
    }

    RunResult result = scenario.quad ? run_quad_scenario(scenario, seed, source)
                                     : run_scalar_scenario(scenario, seed, source);
    result.certificate = certificate;
    result.certificate_gated = gated;
    if (gated && !result.diverged) {
        for (const AxisResult& axis : result.axes) {
            result.bound_reports.push_back(verify_state_bound(
                axis.trace, scenario.gain_estimate(), scenario.adaptation.lipschitz));
        }
    }
    return result;
}

std::string to_string(NetworkKind kind) {
    return kind == NetworkKind::LipNet ? "lipnet" : "baseline";
}

std::string to_string(TaskKind task) { return task == TaskKind::Hover ? "hover" : "circle"; }

}  // namespace lipmrac
