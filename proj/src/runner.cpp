#include "lipmrac/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lipmrac {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream stream(s);
    std::string part;
    while (std::getline(stream, part, sep)) {
        parts.push_back(trim(part));
    }
    return parts;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t consumed = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    if (consumed != value.size()) {
        throw std::runtime_error("config: key '" + key + "' expects a number, got '" + value + "'");
    }
    return parsed;
}

int parse_int(const std::string& key, const std::string& value) {
    const double parsed = parse_double(key, value);
    if (parsed != std::floor(parsed)) {
        throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
    return static_cast<int>(parsed);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw std::runtime_error("config: key '" + key + "' expects true/false, got '" + value + "'");
}

const std::set<std::string>& known_top_level_keys() {
    static const std::set<std::string> keys = {
        "scenario",     "seeds",        "out_dir",      "jobs",       "emit_traces",
        "emit_metrics", "emit_summary", "sweep_rates",  "sweep_kinds"};
    return keys;
}

const std::set<std::string>& known_override_keys() {
    static const std::set<std::string> keys = {
        "horizon",
        "gamma",
        "adaptation.network",
        "adaptation.lipschitz",
        "adaptation.learning_rate",
        "adaptation.mode",
        "adaptation.fold_h",
        "adaptation.blr_window",
        "adaptation.blr_min_samples",
        "adaptation.blr_prior_precision",
        "adaptation.blr_noise_precision",
        "net.depth",
        "net.width",
        "net.group_size",
        "disturbance.input_offset",
        "disturbance.input_amplitude",
        "disturbance.input_omega",
        "disturbance.input_phase",
        "disturbance.start_step",
        "disturbance.end_step",
        "quad.task",
        "quad.circle_radius",
        "quad.circle_rate",
        "quad.pendulum_length",
        "quad.surrogate_pole",
        "quad.surrogate_dc_gain",
        "quad.surrogate_input_warp",
        "quad.initial_pendulum_offset",
        "quad.lqr_state_weight",
        "quad.lqr_input_weight"};
    return keys;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, bool validate) {
    ExperimentConfig config;
    if (const char* env = std::getenv("LIPMRAC_OUT_DIR")) {
        config.out_dir = env;
    } else {
        config.out_dir = "out";
    }

    std::set<std::string> seen;
    std::string section;
    std::stringstream stream(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section != "override") {
                throw std::runtime_error("config: unknown section '[" + section + "]' at line " +
                                         std::to_string(line_no));
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: expected key = value at line " +
                                     std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qualified = section.empty() ? key : section + "." + key;
        if (!seen.insert(qualified).second) {
            throw std::runtime_error("config: duplicate key '" + qualified + "'");
        }

        if (section == "override") {
            if (known_override_keys().count(key) == 0) {
                throw std::runtime_error("config: unknown override key '" + key + "'");
            }
            config.overrides[key] = value;
            continue;
        }
        if (known_top_level_keys().count(key) == 0) {
            throw std::runtime_error("config: unknown key '" + key + "'");
        }
        if (key == "scenario") {
            config.scenario_name = value;
        } else if (key == "seeds") {
            for (const std::string& item : split(value, ',')) {
                if (item.empty()) {
                    throw std::runtime_error("config: empty entry in seeds list");
                }
                config.seeds.push_back(
                    static_cast<std::uint64_t>(std::stoull(item)));
            }
        } else if (key == "out_dir") {
            config.out_dir = value;
        } else if (key == "jobs") {
            config.jobs = parse_int(key, value);
            if (config.jobs < 1) {
                throw std::runtime_error("config: jobs must be >= 1");
            }
        } else if (key == "emit_traces") {
            config.emit_traces = parse_bool(key, value);
        } else if (key == "emit_metrics") {
            config.emit_metrics = parse_bool(key, value);
        } else if (key == "emit_summary") {
            config.emit_summary = parse_bool(key, value);
        } else if (key == "sweep_rates") {
            for (const std::string& item : split(value, ',')) {
                config.sweep_rates.push_back(parse_double(key, item));
            }
        } else if (key == "sweep_kinds") {
            for (const std::string& item : split(value, ',')) {
                if (item == "lipnet") {
                    config.sweep_kinds.push_back(NetworkKind::LipNet);
                } else if (item == "baseline") {
                    config.sweep_kinds.push_back(NetworkKind::Baseline);
                } else {
                    throw std::runtime_error("config: unknown network kind '" + item + "'");
                }
            }
        }
    }
    if (config.scenario_name.empty()) {
        throw std::runtime_error("config: missing required key 'scenario'");
    }
    if (validate) {
        // Resolving applies overrides and the certificate gate.
        resolve_scenarios(config);
    }
    return config;
}

ExperimentConfig parse_config_file(const std::string& path, bool validate) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), validate);
}

void apply_override(Scenario& scenario, const std::string& key, const std::string& value) {
    if (known_override_keys().count(key) == 0) {
        throw std::runtime_error("config: unknown override key '" + key + "'");
    }
    const auto need_quad = [&]() -> QuadPendSpec& {
        if (!scenario.quad) {
            throw std::runtime_error("config: override '" + key +
                                     "' does not apply to scenario '" + scenario.name + "'");
        }
        return *scenario.quad;
    };
    if (key == "horizon") {
        scenario.horizon = parse_int(key, value);
        if (scenario.horizon < 1) {
            throw std::runtime_error("config: horizon must be >= 1");
        }
    } else if (key == "gamma") {
        scenario.gamma = parse_double(key, value);
        if (!(scenario.gamma > 0.0)) {
            throw std::runtime_error("config: gamma must be > 0");
        }
    } else if (key == "adaptation.network") {
        if (value == "lipnet") {
            scenario.adaptation.kind = NetworkKind::LipNet;
        } else if (value == "baseline") {
            scenario.adaptation.kind = NetworkKind::Baseline;
        } else {
            throw std::runtime_error("config: adaptation.network expects lipnet|baseline");
        }
    } else if (key == "adaptation.lipschitz") {
        scenario.adaptation.lipschitz = parse_double(key, value);
        if (!(scenario.adaptation.lipschitz > 0.0)) {
            throw std::runtime_error("config: adaptation.lipschitz must be > 0");
        }
    } else if (key == "adaptation.learning_rate") {
        scenario.adaptation.learning_rate = parse_double(key, value);
        if (scenario.adaptation.learning_rate < 0.0) {
            throw std::runtime_error("config: adaptation.learning_rate must be >= 0");
        }
    } else if (key == "adaptation.mode") {
        if (value == "predictive") {
            scenario.adaptation.mode = UpdateMode::Predictive;
        } else if (value == "delayed") {
            scenario.adaptation.mode = UpdateMode::Delayed;
        } else {
            throw std::runtime_error("config: adaptation.mode expects predictive|delayed");
        }
    } else if (key == "adaptation.fold_h") {
        scenario.adaptation.fold_h_into_rate = parse_bool(key, value);
    } else if (key == "adaptation.blr_window") {
        scenario.adaptation.blr.window = parse_int(key, value);
    } else if (key == "adaptation.blr_min_samples") {
        scenario.adaptation.blr.min_samples = parse_int(key, value);
    } else if (key == "adaptation.blr_prior_precision") {
        scenario.adaptation.blr.prior_precision = parse_double(key, value);
    } else if (key == "adaptation.blr_noise_precision") {
        scenario.adaptation.blr.noise_precision = parse_double(key, value);
    } else if (key == "net.depth") {
        scenario.adaptation.depth = parse_int(key, value);
    } else if (key == "net.width") {
        scenario.adaptation.width = parse_int(key, value);
    } else if (key == "net.group_size") {
        scenario.adaptation.group_size = parse_int(key, value);
    } else if (key.rfind("disturbance.", 0) == 0) {
        // The disturbance.* keys together describe one additive input term.
        if (scenario.disturbances.terms.empty()) {
            scenario.disturbances.terms.emplace_back();
            scenario.disturbances.terms.back().target = DisturbanceTarget::Input;
        }
        DisturbanceTerm& term = scenario.disturbances.terms.back();
        if (key == "disturbance.input_offset") {
            term.offset = parse_double(key, value);
        } else if (key == "disturbance.input_amplitude") {
            term.amplitude = parse_double(key, value);
        } else if (key == "disturbance.input_omega") {
            term.omega = parse_double(key, value);
        } else if (key == "disturbance.input_phase") {
            term.phase = parse_double(key, value);
        } else if (key == "disturbance.start_step") {
            term.start_step = parse_int(key, value);
        } else if (key == "disturbance.end_step") {
            term.end_step = parse_int(key, value);
        }
    } else if (key == "quad.task") {
        if (value == "hover") {
            need_quad().task = TaskKind::Hover;
        } else if (value == "circle") {
            need_quad().task = TaskKind::Circle;
        } else {
            throw std::runtime_error("config: quad.task expects hover|circle");
        }
    } else if (key == "quad.circle_radius") {
        need_quad().circle_radius = parse_double(key, value);
    } else if (key == "quad.circle_rate") {
        need_quad().circle_rate = parse_double(key, value);
    } else if (key == "quad.pendulum_length") {
        need_quad().pendulum_length = parse_double(key, value);
    } else if (key == "quad.surrogate_pole") {
        need_quad().surrogate_pole = parse_double(key, value);
    } else if (key == "quad.surrogate_dc_gain") {
        need_quad().surrogate_dc_gain = parse_double(key, value);
    } else if (key == "quad.surrogate_input_warp") {
        need_quad().surrogate_input_warp = parse_double(key, value);
    } else if (key == "quad.initial_pendulum_offset") {
        need_quad().initial_pendulum_offset = parse_double(key, value);
    } else if (key == "quad.lqr_state_weight") {
        need_quad().lqr_state_weight = parse_double(key, value);
    } else if (key == "quad.lqr_input_weight") {
        need_quad().lqr_input_weight = parse_double(key, value);
    }
}

std::vector<std::string> known_scenario_names() {
    return {"sim-example", "rate-sweep", "quad-hover", "quad-circle", "reference-sampling"};
}

std::vector<Scenario> resolve_scenarios(const ExperimentConfig& config) {
    std::vector<Scenario> scenarios;
    const std::string& name = config.scenario_name;
    if (name == "sim-example") {
        scenarios.push_back(scenario_sim_example());
    } else if (name == "rate-sweep") {
        const std::vector<double> default_rates = {1.0, 3.3, 10.0, 33.0, 100.0, 330.0, 1000.0};
        const std::vector<NetworkKind> default_kinds = {NetworkKind::LipNet,
                                                        NetworkKind::Baseline};
        scenarios = scenario_learning_rate_sweep(
            config.sweep_rates.empty() ? default_rates : config.sweep_rates,
            config.sweep_kinds.empty() ? default_kinds : config.sweep_kinds);
    } else if (name == "quad-hover") {
        scenarios.push_back(scenario_flying_pendulum(TaskKind::Hover));
    } else if (name == "quad-circle") {
        scenarios.push_back(scenario_flying_pendulum(TaskKind::Circle));
    } else if (name == "reference-sampling") {
        scenarios = scenario_reference_sampling(5, 2024);
    } else {
        throw std::runtime_error("config: unknown scenario '" + name + "'");
    }

    for (Scenario& scenario : scenarios) {
        for (const auto& [key, value] : config.overrides) {
            apply_override(scenario, key, value);
        }
        if (!config.seeds.empty()) {
            scenario.seeds = config.seeds;
        }
        if (scenario.seeds.empty()) {
            throw std::runtime_error("config: seed list is empty for scenario '" + scenario.name +
                                     "'");
        }
        if (scenario.adaptation.kind == NetworkKind::LipNet &&
            !small_gain_check(scenario.adaptation.lipschitz, scenario.gamma).certified()) {
            throw std::runtime_error(
                "config: certificate gate rejected scenario '" + scenario.name +
                "' (adaptation.lipschitz = " + format_double(scenario.adaptation.lipschitz) +
                " >= 1/gamma with gamma = " + format_double(scenario.gamma) + ")");
        }
    }
    return scenarios;
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_trace_csv(std::ostream& out, const SimTrace& trace) {
    const int na = trace.x_a.empty() ? 0 : static_cast<int>(trace.x_a.front().size());
    const int nm = trace.x_m.empty() ? 0 : static_cast<int>(trace.x_m.front().size());
    out << "k,t";
    for (int i = 0; i < na; ++i) {
        out << ",x_a" << i;
    }
    for (int i = 0; i < nm; ++i) {
        out << ",x_m" << i;
    }
    out << ",u,du,u_a,y_a,y_m,e\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << k << "," << format_double(trace.t[k]);
        for (int i = 0; i < na; ++i) {
            out << "," << format_double(trace.x_a[k][i]);
        }
        for (int i = 0; i < nm; ++i) {
            out << "," << format_double(trace.x_m[k][i]);
        }
        out << "," << format_double(trace.u[k]) << "," << format_double(trace.du[k]) << ","
            << format_double(trace.u_a[k]) << "," << format_double(trace.y_a[k]) << ","
            << format_double(trace.y_m[k]) << "," << format_double(trace.e[k]) << "\n";
    }
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "scenario,seed,learning_rate,lipschitz,gamma,beta,rms_output_error,"
           "rms_quad_position_error,rms_pendulum_position_error,diverged,"
           "certificate_slack,bound_pass,bound_lhs,bound_rhs,lqr_gains\n";
    for (const MetricsRow& row : rows) {
        out << row.scenario << "," << row.seed << "," << format_double(row.learning_rate) << ","
            << format_double(row.lipschitz) << "," << format_double(row.gamma) << ","
            << format_double(row.beta) << "," << format_double(row.rms_output_error) << ","
            << format_double(row.rms_quad_position_error) << ","
            << format_double(row.rms_pendulum_position_error) << "," << (row.diverged ? 1 : 0)
            << "," << format_double(row.certificate_slack) << "," << row.bound_pass << ","
            << format_double(row.bound_lhs) << "," << format_double(row.bound_rhs) << ","
            << row.lqr_gains << "\n";
    }
}

namespace {

MetricsRow make_metrics_row(const Scenario& scenario, std::uint64_t seed,
                            const RunResult& result, double wall_clock) {
    MetricsRow row;
    row.scenario = scenario.name;
    row.seed = seed;
    row.learning_rate = scenario.adaptation.learning_rate;
    row.lipschitz = scenario.adaptation.kind == NetworkKind::LipNet
                        ? scenario.adaptation.lipschitz
                        : std::numeric_limits<double>::infinity();
    row.gamma = scenario.gamma;
    row.beta = scenario.beta;
    row.rms_output_error = result.rms_output_error();
    for (std::size_t axis = 0; axis < result.lqr_gains.size(); ++axis) {
        if (axis > 0) {
            row.lqr_gains += "|";
        }
        const Vector& gains = result.lqr_gains[axis];
        for (int i = 0; i < gains.size(); ++i) {
            row.lqr_gains += (i > 0 ? ";" : "") + format_double(gains[i]);
        }
    }
    if (result.quad) {
        row.rms_quad_position_error = result.quad->rms_quad_error();
        row.rms_pendulum_position_error = result.quad->rms_pendulum_error();
    } else {
        row.rms_quad_position_error = std::numeric_limits<double>::quiet_NaN();
        row.rms_pendulum_position_error = std::numeric_limits<double>::quiet_NaN();
    }
    row.diverged = result.diverged;
    row.wall_clock_seconds = wall_clock;
    if (result.certificate_gated) {
        row.certificate_slack = result.certificate.slack;
        if (result.diverged) {
            row.bound_pass = 0;
            row.bound_lhs = std::numeric_limits<double>::quiet_NaN();
            row.bound_rhs = std::numeric_limits<double>::quiet_NaN();
        } else {
            bool all_pass = true;
            double worst_ratio = -1.0;
            for (const StateBoundReport& report : result.bound_reports) {
                all_pass = all_pass && report.pass;
                const double ratio = report.rhs > 0.0 ? report.lhs / report.rhs : 0.0;
                if (ratio > worst_ratio) {
                    worst_ratio = ratio;
                    row.bound_lhs = report.lhs;
                    row.bound_rhs = report.rhs;
                }
            }
            row.bound_pass = all_pass ? 1 : 0;
        }
    } else {
        row.certificate_slack = std::numeric_limits<double>::quiet_NaN();
        row.bound_pass = -1;
        row.bound_lhs = std::numeric_limits<double>::quiet_NaN();
        row.bound_rhs = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (c == '/' || c == ' ') {
            c = '_';
        }
    }
    return out;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    const std::vector<Scenario> scenarios = resolve_scenarios(config);

    struct Trial {
        const Scenario* scenario;
        std::uint64_t seed;
    };
    std::vector<Trial> trials;
    for (const Scenario& scenario : scenarios) {
        for (std::uint64_t seed : scenario.seeds) {
            trials.push_back({&scenario, seed});
        }
    }

    std::vector<RunResult> results(trials.size());
    std::vector<double> wall_clock(trials.size(), 0.0);
    std::vector<std::exception_ptr> errors(trials.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(trials.size())));
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= trials.size()) {
                return;
            }
            const auto start = std::chrono::steady_clock::now();
            try {
                results[i] = execute_scenario(*trials[i].scenario, trials[i].seed);
            } catch (...) {
                errors[i] = std::current_exception();
            }
            wall_clock[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count();
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) {
            pool.emplace_back(work);
        }
        for (std::thread& thread : pool) {
            thread.join();
        }
    }
    for (const std::exception_ptr& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }

    ExperimentOutcome outcome;
    outcome.rows.reserve(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        outcome.rows.push_back(
            make_metrics_row(*trials[i].scenario, trials[i].seed, results[i], wall_clock[i]));
        const MetricsRow& row = outcome.rows.back();
        if (row.bound_pass == 0 || (results[i].certificate_gated && row.diverged)) {
            outcome.certified_invariants_ok = false;
        }
    }

    namespace fs = std::filesystem;
    const fs::path out_dir(config.out_dir);
    if (config.emit_traces || config.emit_metrics || config.emit_summary) {
        fs::create_directories(out_dir);
    }
    if (config.emit_traces) {
        fs::create_directories(out_dir / "traces");
        for (std::size_t i = 0; i < trials.size(); ++i) {
            for (const AxisResult& axis : results[i].axes) {
                const fs::path path = out_dir / "traces" /
                                      (sanitize(trials[i].scenario->name) + "-seed" +
                                       std::to_string(trials[i].seed) + "-" + axis.label + ".csv");
                std::ofstream file(path);
                if (!file) {
                    throw std::runtime_error("run_experiment: cannot write " + path.string());
                }
                write_trace_csv(file, axis.trace);
                outcome.artifacts.push_back(path.string());
            }
        }
    }
    if (config.emit_metrics) {
        const fs::path path = out_dir / "metrics.csv";
        std::ofstream file(path);
        if (!file) {
            throw std::runtime_error("run_experiment: cannot write " + path.string());
        }
        write_metrics_csv(file, outcome.rows);
        outcome.artifacts.push_back(path.string());
    }
    if (config.emit_summary) {
        const fs::path path = out_dir / "summary.txt";
        std::ofstream file(path);
        if (!file) {
            throw std::runtime_error("run_experiment: cannot write " + path.string());
        }
        file << summarize(outcome.rows);
        outcome.artifacts.push_back(path.string());
    }
    return outcome;
}

std::string summarize(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) {
        throw std::invalid_argument("summarize: need at least one metrics row");
    }
    // Group by scenario in first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> groups;
    for (const MetricsRow& row : rows) {
        if (groups.find(row.scenario) == groups.end()) {
            order.push_back(row.scenario);
        }
        groups[row.scenario].push_back(&row);
    }

    std::ostringstream out;
    out << "scenario                                   trials  diverged  rms mean +- std        "
           "wall[s]\n";
    for (const std::string& name : order) {
        const auto& group = groups[name];
        double mean = 0.0;
        int diverged = 0;
        double wall = 0.0;
        for (const MetricsRow* row : group) {
            mean += row->rms_output_error;
            diverged += row->diverged ? 1 : 0;
            wall += row->wall_clock_seconds;
        }
        mean /= static_cast<double>(group.size());
        double var = 0.0;
        for (const MetricsRow* row : group) {
            var += (row->rms_output_error - mean) * (row->rms_output_error - mean);
        }
        const double stdev =
            group.size() > 1 ? std::sqrt(var / static_cast<double>(group.size() - 1)) : 0.0;
        char line[256];
        std::snprintf(line, sizeof(line), "%-42s %6zu  %8d  %.6g +- %.6g  %8.3f\n", name.c_str(),
                      group.size(), diverged, mean, stdev, wall);
        out << line;
    }

    out << "\ncertificates (L, gamma, slack, bound pass/total):\n";
    for (const std::string& name : order) {
        const auto& group = groups[name];
        const MetricsRow* first = group.front();
        int pass = 0;
        int applicable = 0;
        for (const MetricsRow* row : group) {
            if (row->bound_pass >= 0) {
                ++applicable;
                pass += row->bound_pass == 1 ? 1 : 0;
            }
        }
        char line[256];
        if (std::isinf(first->lipschitz)) {
            std::snprintf(line, sizeof(line), "%-42s uncertified (no Lipschitz bound)\n",
                          name.c_str());
        } else {
            std::snprintf(line, sizeof(line), "%-42s L=%g gamma=%g slack=%g bound %d/%d\n",
                          name.c_str(), first->lipschitz, first->gamma,
                          first->certificate_slack, pass, applicable);
        }
        out << line;
    }
    return out.str();
}

std::string certify_report(const ExperimentConfig& config, bool* all_certified) {
    // Resolve without the gate so VIOLATED combinations can be reported
    // rather than rejected: overrides are applied manually here.
    std::vector<Scenario> scenarios;
    {
        ExperimentConfig relaxed = config;
        relaxed.overrides.clear();
        scenarios = resolve_scenarios(relaxed);
        for (Scenario& scenario : scenarios) {
            for (const auto& [key, value] : config.overrides) {
                apply_override(scenario, key, value);
            }
        }
    }
    bool ok = true;
    std::ostringstream out;
    out << "scenario                                   L          gamma      status     slack\n";
    for (const Scenario& scenario : scenarios) {
        char line[256];
        if (scenario.adaptation.kind != NetworkKind::LipNet) {
            std::snprintf(line, sizeof(line), "%-42s %-10s %-10g n/a        -\n",
                          scenario.name.c_str(), "unbounded", scenario.gamma);
        } else {
            const Certificate cert =
                small_gain_check(scenario.adaptation.lipschitz, scenario.gamma);
            ok = ok && cert.certified();
            std::snprintf(line, sizeof(line), "%-42s %-10g %-10g %-10s %g\n",
                          scenario.name.c_str(), cert.lipschitz, cert.gamma,
                          to_string(cert.status).c_str(), cert.slack);
        }
        out << line;
    }
    if (all_certified != nullptr) {
        *all_certified = ok;
    }
    return out.str();
}

}  // namespace lipmrac
