#pragma once

#include "lipmrac/scenarios.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lipmrac {

/// Experiment description parsed from the sectioned key=value config text.
/// Top-level keys: scenario, seeds, out_dir, jobs, emit_traces,
/// emit_metrics, emit_summary, sweep_rates, sweep_kinds. Scenario field
/// overrides live in an [override] section with dotted keys (see
/// apply_override). Unknown or duplicate keys are rejected.
struct ExperimentConfig {
    std::string scenario_name;
    std::map<std::string, std::string> overrides;
    std::vector<std::uint64_t> seeds;  // empty = use the scenario's defaults
    std::string out_dir;
    int jobs = 1;
    bool emit_traces = true;
    bool emit_metrics = true;
    bool emit_summary = true;
    std::vector<double> sweep_rates;        // rate-sweep only
    std::vector<NetworkKind> sweep_kinds;   // rate-sweep only
};

// Parsing validates the schema and, when `validate` is set, resolves the
// scenarios so bad overrides (including uncertified L/gamma combinations)
// are rejected up front. certify passes false to report VIOLATED configs
// instead of refusing them.
ExperimentConfig parse_config_text(const std::string& text, bool validate = true);
ExperimentConfig parse_config_file(const std::string& path, bool validate = true);

// Applies one dotted-key override; throws on unknown key or bad value.
void apply_override(Scenario& scenario, const std::string& key, const std::string& value);

// Scenario list for a config: named scenario(s) with overrides and the seed
// list applied, certificate gate re-checked per scenario.
std::vector<Scenario> resolve_scenarios(const ExperimentConfig& config);

std::vector<std::string> known_scenario_names();

/// One row per (scenario, seed) trial. wall_clock_seconds is reported in
/// the summary only; the metrics CSV stays byte-stable across runs.
struct MetricsRow {
    std::string scenario;
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    double lipschitz = 0.0;  // +inf for the unconstrained baseline
    double gamma = 0.0;
    double beta = 0.0;  // gain-bound offset backing the certificate
    double rms_output_error = 0.0;
    double rms_quad_position_error = 0.0;  // nan for scalar scenarios
    double rms_pendulum_position_error = 0.0;
    bool diverged = false;
    double certificate_slack = 0.0;  // nan when the gate did not apply
    int bound_pass = -1;             // 1 pass, 0 fail, -1 not applicable
    double bound_lhs = 0.0;
    double bound_rhs = 0.0;
    std::string lqr_gains;  // per-axis designed gains, ';' within, '|' between
    double wall_clock_seconds = 0.0;
};

struct ExperimentOutcome {
    std::vector<MetricsRow> rows;
    // False when any certified trial diverged or failed the state bound.
    bool certified_invariants_ok = true;
    std::vector<std::string> artifacts;  // paths written
};

// Executes all (scenario, seed) trials, up to `jobs` in parallel, and
// writes the per-trial trace CSVs, the metrics CSV and the summary text.
// Output ordering is fixed by (scenario, seed), not completion order.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

std::string summarize(const std::vector<MetricsRow>& rows);

// Small-gain certificate report for the config without simulating.
std::string certify_report(const ExperimentConfig& config, bool* all_certified = nullptr);

void write_trace_csv(std::ostream& out, const SimTrace& trace);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

// 17-significant-digit formatting used for every float in emitted CSVs.
std::string format_double(double value);

}  // namespace lipmrac
