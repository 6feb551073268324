// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. `--print-pins` re-derives the frozen regression constants in
// acceptance_pins.hpp.

#include "lipmrac/adaptation.hpp"
#include "lipmrac/random.hpp"
#include "lipmrac/runner.hpp"
#include "lipmrac/scenarios.hpp"
#include "lipmrac/stability.hpp"

#include "acceptance_pins.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace lipmrac;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    if (!pass) {
        ++g_failures;
    }
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Vector random_vector(int dim, std::mt19937_64& rng, double scale) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        v[i] = scale * standard_normal(rng);
    }
    return v;
}

double min_tie_distance(const LipNet& net, const Vector& xi) {
    double min_gap = std::numeric_limits<double>::infinity();
    Vector z = xi;
    const auto& weights = net.weights();
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        Vector a = weights[l] * z;
        std::vector<double> sorted(a.data(), a.data() + a.size());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            min_gap = std::min(min_gap, sorted[i + 1] - sorted[i]);
        }
        z = group_sort(a, 0);
    }
    return min_gap;
}

// --- criterion 1 -----------------------------------------------------------

void criterion_1(bool print_pins) {
    const auto start = std::chrono::steady_clock::now();
    const Scenario scenario = scenario_sim_example();
    const RunResult baseline = execute_scenario(scenario, 0, AdjustmentSource::None);
    const double baseline_rms = baseline.rms_output_error();

    std::vector<double> adapted_rms;
    bool all_complete = true;
    bool all_improved = true;
    for (std::uint64_t seed : scenario.seeds) {
        const RunResult run = execute_scenario(scenario, seed);
        all_complete = all_complete && !run.diverged;
        const double rms = run.rms_output_error();
        adapted_rms.push_back(rms);
        all_improved = all_improved && rms < 0.5 * baseline_rms;
    }
    const double elapsed = seconds_since(start);

    if (print_pins) {
        std::printf("inline constexpr bool kPopulated = true;\n\n");
        std::printf("inline constexpr double kBaselineRms = %.17g;\n\n", baseline_rms);
        std::printf("inline constexpr std::array<double, 10> kAdaptedRms = {\n");
        for (double rms : adapted_rms) {
            std::printf("    %.17g,\n", rms);
        }
        std::printf("};\n");
        return;
    }

    bool pinned_ok = pins::kPopulated;
    if (pinned_ok) {
        pinned_ok = std::abs(baseline_rms - pins::kBaselineRms) <= 1e-9 * pins::kBaselineRms;
        for (std::size_t i = 0; i < adapted_rms.size(); ++i) {
            pinned_ok = pinned_ok &&
                        std::abs(adapted_rms[i] - pins::kAdaptedRms[i]) <=
                            1e-9 * pins::kAdaptedRms[i];
        }
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "baseline rms %.4g, adapted %.4g..%.4g, pins %s, %.2f s", baseline_rms,
                  *std::min_element(adapted_rms.begin(), adapted_rms.end()),
                  *std::max_element(adapted_rms.begin(), adapted_rms.end()),
                  pinned_ok ? "hold" : "MISSING/DRIFTED", elapsed);
    report(1, "adapted output tracks the reference at lambda=33, pinned regression",
           all_complete && all_improved && pinned_ok && elapsed < 5.0, detail);
}

// --- criterion 2 -----------------------------------------------------------

void criterion_2() {
    const auto start = std::chrono::steady_clock::now();
    int lipnet_runs = 0;
    int lipnet_ok = 0;
    int baseline_diverged_high_rate = 0;
    for (const Scenario& scenario : scenario_learning_rate_sweep()) {
        for (std::uint64_t seed : scenario.seeds) {
            const RunResult run = execute_scenario(scenario, seed);
            if (scenario.adaptation.kind == NetworkKind::LipNet) {
                ++lipnet_runs;
                bool ok = !run.diverged && !run.bound_reports.empty();
                for (const StateBoundReport& rep : run.bound_reports) {
                    ok = ok && rep.pass;
                }
                lipnet_ok += ok ? 1 : 0;
            } else if (run.diverged && scenario.adaptation.learning_rate >= 100.0) {
                ++baseline_diverged_high_rate;
            }
        }
    }
    const double elapsed = seconds_since(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "lipnet %d/%d stable with bound, baseline diverged %d trials at rate>=100, "
                  "%.1f s",
                  lipnet_ok, lipnet_runs, baseline_diverged_high_rate, elapsed);
    report(2, "learning-rate sweep robustness",
           lipnet_runs == 70 && lipnet_ok == 70 && baseline_diverged_high_rate >= 1 &&
               elapsed < 60.0,
           detail);
}

// --- criterion 3 -----------------------------------------------------------

void criterion_3() {
    const Certificate sim = small_gain_check(0.89, 1.12);
    const Certificate quad = small_gain_check(0.8, 0.68);
    bool ok = sim.certified() && quad.certified();
    ok = ok && std::abs(sim.slack - (1.0 / 1.12 - 0.89)) < 1e-15;
    ok = ok && std::abs(quad.slack - (1.0 / 0.68 - 0.8)) < 1e-15;

    // Monotonicity over a 100-point grid in each argument: once violated at
    // some L (or gamma), every larger value stays violated.
    bool monotone = true;
    for (int j = 1; j <= 100; ++j) {
        const double gamma = 0.025 * j;
        bool seen_violation = false;
        for (int i = 1; i <= 100; ++i) {
            const double lipschitz = 0.03 * i;
            const bool certified = small_gain_check(lipschitz, gamma).certified();
            if (seen_violation && certified) {
                monotone = false;
            }
            seen_violation = seen_violation || !certified;
        }
    }
    for (int i = 1; i <= 100; ++i) {
        const double lipschitz = 0.03 * i;
        bool seen_violation = false;
        for (int j = 1; j <= 100; ++j) {
            const double gamma = 0.025 * j;
            const bool certified = small_gain_check(lipschitz, gamma).certified();
            if (seen_violation && certified) {
                monotone = false;
            }
            seen_violation = seen_violation || !certified;
        }
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "slack(0.89,1.12)=%.6g, slack(0.8,0.68)=%.6g, grid monotone=%d", sim.slack,
                  quad.slack, monotone);
    report(3, "small-gain certificate arithmetic", ok && monotone, detail);
}

// --- criterion 4 -----------------------------------------------------------

void criterion_4() {
    const Scenario scenario = scenario_sim_example();
    const Interconnection interconnection{scenario.axes[0].plant, scenario.axes[0].reference, {}};
    ClosedLoopOptions options;
    options.sample_time = scenario.sample_time;
    options.source = AdjustmentSource::IdealLaw;
    const OpenLoopSignal signal = scenario.axes[0].input;
    const SimTrace trace = run_closed_loop(
        interconnection, nullptr,
        [&](int k) { return signal.at(k, scenario.sample_time); }, 1000, options);
    double worst = 0.0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
        worst = std::max(worst, std::abs(trace.e[k]));
    }
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max |E_k| for k>=1 over 1000 steps: %.3g", worst);
    report(4, "white-box ideal adjustment drives the error to zero",
           !trace.diverged && trace.size() == 1000 && worst < 1e-9, detail);
}

// --- criterion 5 -----------------------------------------------------------

void criterion_5() {
    // (a) parameter gradients vs central finite differences at 100 probes.
    bool grad_ok = true;
    {
        std::mt19937_64 init_rng(derive_seed(100, 1));
        const LipNet net({5, 20, 3, 0, false}, 0.89, init_rng);
        std::mt19937_64 probe_rng(derive_seed(100, 2));
        int checked = 0;
        while (checked < 100) {
            const Vector xi = random_vector(5, probe_rng, 2.0);
            if (min_tie_distance(net, xi) < 1e-3) {
                continue;
            }
            const Vector analytic = net.parameter_gradient(xi);
            const Vector fd = oracles::fd_parameter_gradient(net, xi);
            const double scale = fd.cwiseAbs().maxCoeff();
            grad_ok = grad_ok && scale > 0.0 &&
                      (analytic - fd).cwiseAbs().maxCoeff() / scale < 1e-4;
            ++checked;
        }
    }

    // (b) semi-orthogonality after each of 1000 consecutive online updates,
    // driven by the closed-loop protocol on the example pair.
    bool ortho_ok = true;
    {
        const Scenario scenario = scenario_sim_example();
        const Plant& plant = scenario.axes[0].plant;
        const ReferenceModel& ref = scenario.axes[0].reference;
        const OpenLoopSignal signal = scenario.axes[0].input;
        AdaptationConfig cfg;
        cfg.learning_rate = scenario.adaptation.learning_rate;
        MracEngine engine(make_network(scenario.adaptation, 5, 0), cfg, 1);
        Vector x_a = Vector::Zero(2);
        Vector x_m = Vector::Zero(2);
        for (int k = 0; k < 1000; ++k) {
            const double u = signal.at(k, scenario.sample_time);
            engine.begin_step(plant.output(x_a), ref.output(x_m));
            const auto decision = engine.decide(x_a, x_m, u);
            const IoCoefficients ref_io = io_map_coefficients(ref, x_m);
            engine.finish_step(ref_io.F + ref_io.G * u);
            x_m = ref.step(x_m, u);
            x_a = plant.step(x_a, decision.u_a);
            engine.record_applied(decision.u_a);
            for (const Matrix& w : dynamic_cast<const LipNet&>(engine.network()).weights()) {
                ortho_ok = ortho_ok && oracles::max_singular_deviation(w) < 1e-6;
            }
        }
    }

    // (c) sampled Lipschitz bound over 1e4 pairs.
    bool lipschitz_ok = true;
    {
        std::mt19937_64 init_rng(derive_seed(101, 1));
        const LipNet net({5, 20, 3, 0, false}, 0.89, init_rng);
        std::mt19937_64 sample_rng(derive_seed(101, 2));
        lipschitz_ok = oracles::empirical_lipschitz(net, 10000, sample_rng) <=
                       0.89 * (1.0 + 1e-9);
    }

    // (d) BLR posterior vs the ridge oracle at 1e-8 relative.
    bool blr_ok = true;
    {
        std::mt19937_64 rng(derive_seed(102, 1));
        BlrConfig cfg;
        cfg.window = 25;
        cfg.prior_precision = 1e-5;
        cfg.noise_precision = 1.5;
        BlrModel model(cfg);
        std::vector<Vector> feats;
        std::vector<double> targets;
        for (int k = 0; k < 100; ++k) {
            const double y = standard_normal(rng);
            const double u = standard_normal(rng);
            const double t = standard_normal(rng);
            model.update(y, u, t);
            Vector phi(3);
            phi << y, u, 1.0;
            feats.push_back(phi);
            targets.push_back(t);
            const std::size_t begin = feats.size() > 25 ? feats.size() - 25 : 0;
            Matrix x(feats.size() - begin, 3);
            Vector tv(feats.size() - begin);
            for (std::size_t i = begin; i < feats.size(); ++i) {
                x.row(i - begin) = feats[i].transpose();
                tv[i - begin] = targets[i];
            }
            const Vector ridge = oracles::ridge_solution(
                x, tv, cfg.prior_precision / cfg.noise_precision);
            blr_ok = blr_ok && (model.posterior_mean() - ridge).norm() /
                                       std::max(1e-12, ridge.norm()) <
                                   1e-8;
        }
    }

    // (e) Riccati residual and value-iteration agreement on 20 systems.
    bool lqr_ok = true;
    {
        std::mt19937_64 rng(derive_seed(103, 1));
        int tested = 0;
        while (tested < 20) {
            const int n = 2 + static_cast<int>(rng() % 3);
            const int m = 1 + static_cast<int>(rng() % 2);
            Matrix a(n, n);
            Matrix b(n, m);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    a(i, j) = standard_normal(rng);
                }
                for (int j = 0; j < m; ++j) {
                    b(i, j) = standard_normal(rng);
                }
            }
            a *= (tested % 2 == 0 ? 0.85 : 1.1) / std::max(1e-9, spectral_radius(a));
            const Matrix q = Matrix::Identity(n, n);
            const Matrix r = Matrix::Identity(m, m);
            const LqrDesign design = lqr_design(a, b, q, r);
            Matrix gain_oracle;
            oracles::lqr_value_iteration(a, b, q, r, &gain_oracle);
            lqr_ok = lqr_ok && design.riccati_residual < 1e-8 &&
                     (design.K - gain_oracle).cwiseAbs().maxCoeff() < 1e-6;
            ++tested;
        }
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "gradients %d, projection %d, lipschitz %d, blr %d, lqr %d", grad_ok, ortho_ok,
                  lipschitz_ok, blr_ok, lqr_ok);
    report(5, "numerical conformance suite",
           grad_ok && ortho_ok && lipschitz_ok && blr_ok && lqr_ok, detail);
}

// --- criterion 6 -----------------------------------------------------------

void criterion_6() {
    const auto start = std::chrono::steady_clock::now();
    const Scenario hover = scenario_flying_pendulum(TaskKind::Hover);
    const double tail_fraction = 5.0 / (hover.horizon * hover.sample_time);

    const RunResult adapted = execute_scenario(hover, 0);
    const double adapted_tail = adapted.quad->max_pendulum_error_tail(tail_fraction);
    const bool adapted_ok = !adapted.diverged && adapted_tail < 0.01;

    const RunResult raw = execute_scenario(hover, 0, AdjustmentSource::None);
    const double raw_tail = raw.quad->max_pendulum_error_tail(tail_fraction);
    const bool raw_worse = raw.diverged || raw_tail >= 3.0 * adapted_tail;

    const double elapsed = seconds_since(start);
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "adapted tail %.3g m, raw %s (tail %.3g m), %.2f s", adapted_tail,
                  raw.diverged ? "diverged" : "completed", raw_tail, elapsed);
    report(6, "simulated hover stabilizes; the unaided controller fails",
           adapted_ok && raw_worse && elapsed < 10.0, detail);
}

// --- criterion 7 -----------------------------------------------------------

void criterion_7() {
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path();
    const fs::path dir_a = base / "lipmrac_acceptance_a";
    const fs::path dir_b = base / "lipmrac_acceptance_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    ExperimentConfig config = parse_config_text("scenario = sim-example\nseeds = 0, 1, 2\n");
    config.out_dir = dir_a.string();
    config.jobs = 1;
    run_experiment(config);
    config.out_dir = dir_b.string();
    config.jobs = 3;
    run_experiment(config);

    bool identical = slurp(dir_a / "metrics.csv") == slurp(dir_b / "metrics.csv");
    int trace_files = 0;
    for (const auto& entry : fs::directory_iterator(dir_a / "traces")) {
        identical =
            identical && slurp(entry.path()) == slurp(dir_b / "traces" / entry.path().filename());
        ++trace_files;
    }
    identical = identical && trace_files == 3;
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    char detail[96];
    std::snprintf(detail, sizeof(detail), "metrics + %d trace files byte-compared", trace_files);
    report(7, "repeated executions emit byte-identical artifacts", identical, detail);
}

}  // namespace

int main(int argc, char** argv) {
    const bool print_pins = argc > 1 && std::string(argv[1]) == "--print-pins";
    if (print_pins) {
        criterion_1(true);
        return 0;
    }
    criterion_1(false);
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
    } else {
        std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    }
    return g_failures == 0 ? 0 : 1;
}
