#include "lipmrac/scenarios.hpp"

#include <doctest.h>

#include <cmath>

using namespace lipmrac;

namespace {

bool traces_equal(const SimTrace& a, const SimTrace& b) {
    if (a.size() != b.size() || a.diverged != b.diverged) {
        return false;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a.du[k] != b.du[k] || a.y_a[k] != b.y_a[k] || a.u[k] != b.u[k]) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("scenario_sim_example definition") {
    const Scenario sc = scenario_sim_example();
    CHECK(sc.name == "sim-example");
    CHECK(sc.adaptation.lipschitz == 0.89);
    CHECK(sc.adaptation.learning_rate == 33.0);
    CHECK(sc.adaptation.kind == NetworkKind::LipNet);
    CHECK(sc.gamma == 1.12);
    CHECK(sc.sample_time == 0.01);
    CHECK(sc.horizon >= 1000);
    CHECK(sc.seeds.size() == 10);
    REQUIRE(sc.axes.size() == 1);
    CHECK(sc.axes[0].input.at(0, sc.sample_time) == 0.0);
    // One full period of the slow tone later the fast tone has moved.
    CHECK(sc.axes[0].input.at(1, sc.sample_time) ==
          doctest::Approx(std::sin(2.0 * M_PI / 5.0 * 0.01) +
                          5.0 * std::cos(2.0 * M_PI / 3.0 * 0.01) - 5.0)
              .epsilon(1e-15));
}

TEST_CASE("scenario_learning_rate_sweep definition") {
    SUBCASE("default grid crosses rates and kinds") {
        const auto sweep = scenario_learning_rate_sweep();
        CHECK(sweep.size() == 14);
        int lipnet_count = 0;
        for (const Scenario& sc : sweep) {
            lipnet_count += sc.adaptation.kind == NetworkKind::LipNet ? 1 : 0;
            CHECK(sc.seeds.size() == 10);
            CHECK(sc.adaptation.fold_h_into_rate);
        }
        CHECK(lipnet_count == 7);
    }

    SUBCASE("single rate reduces to the example setup") {
        const auto sweep = scenario_learning_rate_sweep({33.0}, {NetworkKind::LipNet});
        REQUIRE(sweep.size() == 1);
        const Scenario& sc = sweep[0];
        const Scenario base = scenario_sim_example();
        CHECK(sc.adaptation.learning_rate == base.adaptation.learning_rate);
        CHECK(sc.adaptation.lipschitz == base.adaptation.lipschitz);
        CHECK(sc.gamma == base.gamma);
        CHECK(sc.horizon == base.horizon);
        CHECK(sc.seeds == base.seeds);
        // The sweep axis is in folded units; that is its one departure from
        // the base definition.
        CHECK(sc.adaptation.fold_h_into_rate != base.adaptation.fold_h_into_rate);
    }

    SUBCASE("empty rate list rejected") {
        CHECK_THROWS_AS(scenario_learning_rate_sweep({}), std::invalid_argument);
    }
}

TEST_CASE("scenario_flying_pendulum definition") {
    const Scenario hover = scenario_flying_pendulum(TaskKind::Hover);
    CHECK(hover.name == "quad-hover");
    REQUIRE(hover.quad.has_value());
    CHECK(hover.quad->tau.alpha_x == 0.35);
    CHECK(hover.quad->tau.beta_x == 0.65);
    CHECK(hover.quad->tau.alpha_y == 0.35);
    CHECK(hover.quad->tau.beta_y == 0.65);
    CHECK(hover.adaptation.lipschitz == 0.8);
    CHECK(hover.adaptation.learning_rate == 0.8);
    CHECK(hover.gamma == 0.68);
    CHECK(hover.sample_time == 0.02);

    const Scenario circle = scenario_flying_pendulum(TaskKind::Circle);
    CHECK(circle.name == "quad-circle");
    CHECK(circle.quad->circle_radius == 0.25);
    CHECK(circle.quad->circle_rate == 1.25);
}

TEST_CASE("scenario_reference_sampling definition") {
    const auto scenarios = scenario_reference_sampling(5, 2024);
    CHECK(scenarios.size() == 5);
    for (const Scenario& sc : scenarios) {
        REQUIRE(sc.axes.size() == 2);
        for (const ScalarAxis& axis : sc.axes) {
            REQUIRE(axis.reference.linear.has_value());
            const double pole = axis.reference.linear->A(0, 0);
            const double gain = axis.reference.linear->B(0);
            CHECK(pole > 0.0);
            CHECK(pole < 1.0);
            CHECK(gain > 0.0);
            CHECK(gain <= 1.0);
        }
    }
    // Deterministic in the sampling seed.
    const auto again = scenario_reference_sampling(5, 2024);
    CHECK(again[3].axes[0].reference.linear->A(0, 0) ==
          scenarios[3].axes[0].reference.linear->A(0, 0));
}

TEST_CASE("execute_scenario on the simulation example") {
    const Scenario sc = scenario_sim_example();

    SUBCASE("adapted run beats the no-adaptation baseline") {
        const RunResult adapted = execute_scenario(sc, 0);
        const RunResult baseline = execute_scenario(sc, 0, AdjustmentSource::None);
        CHECK_FALSE(adapted.diverged);
        CHECK(adapted.rms_output_error() < 0.5 * baseline.rms_output_error());
        CHECK(adapted.certificate_gated);
        REQUIRE(adapted.bound_reports.size() == 1);
        CHECK(adapted.bound_reports[0].pass);
    }

    SUBCASE("bit-identical across repeated execution") {
        const RunResult first = execute_scenario(sc, 3);
        const RunResult second = execute_scenario(sc, 3);
        REQUIRE(first.axes.size() == second.axes.size());
        CHECK(traces_equal(first.axes[0].trace, second.axes[0].trace));
    }

    SUBCASE("seeds change the network, not the setup") {
        const RunResult a = execute_scenario(sc, 0);
        const RunResult b = execute_scenario(sc, 1);
        CHECK(a.axes[0].trace.u == b.axes[0].trace.u);
        CHECK_FALSE(traces_equal(a.axes[0].trace, b.axes[0].trace));
    }

    SUBCASE("uncertified gate refuses before running") {
        Scenario bad = sc;
        bad.gamma = 2.0;  // 1/gamma = 0.5 < L
        CHECK_THROWS_WITH_AS(execute_scenario(bad, 0), doctest::Contains("certificate"),
                             std::runtime_error);
        // The gate does not apply to the unconstrained baseline.
        bad.adaptation.kind = NetworkKind::Baseline;
        CHECK_NOTHROW(execute_scenario(bad, 0));
    }
}

TEST_CASE("execute_scenario on the flying pendulum") {
    const Scenario hover = scenario_flying_pendulum(TaskKind::Hover);

    SUBCASE("adapted hover stabilizes the pendulum; raw control does not") {
        const RunResult adapted = execute_scenario(hover, 0);
        REQUIRE(adapted.quad.has_value());
        CHECK_FALSE(adapted.diverged);
        CHECK(adapted.quad->max_pendulum_error_tail(1.0 / 3.0) < 0.01);
        for (const StateBoundReport& report : adapted.bound_reports) {
            CHECK(report.pass);
        }

        const RunResult raw = execute_scenario(hover, 0, AdjustmentSource::None);
        const bool raw_failed =
            raw.diverged || raw.quad->max_pendulum_error_tail(1.0 / 3.0) >
                                3.0 * adapted.quad->max_pendulum_error_tail(1.0 / 3.0);
        CHECK(raw_failed);
    }

    SUBCASE("circle task tracks while balancing") {
        const Scenario circle = scenario_flying_pendulum(TaskKind::Circle);
        const RunResult result = execute_scenario(circle, 0);
        CHECK_FALSE(result.diverged);
        CHECK(result.quad->rms_pendulum_error() < 0.05);
        CHECK(result.quad->rms_quad_error() < 1.0);
    }

    SUBCASE("designed gains are reported per axis") {
        const RunResult result = execute_scenario(hover, 0);
        REQUIRE(result.lqr_gains.size() == 2);
        CHECK(result.lqr_gains[0].size() == 5);
        CHECK(result.lqr_gains[0].cwiseAbs().maxCoeff() > 0.0);
        // Symmetric axis parameters give identical designs.
        CHECK((result.lqr_gains[0] - result.lqr_gains[1]).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("hover rides out a wind gust that fells the unaided controller") {
        Scenario gusty = hover;
        DisturbanceTerm gust;
        gust.target = DisturbanceTarget::Input;
        gust.start_step = 250;
        gust.end_step = 400;
        gust.offset = 0.4;  // m/s^2 bias on the true acceleration channel
        gusty.disturbances.terms.push_back(gust);
        const RunResult adapted = execute_scenario(gusty, 0);
        CHECK_FALSE(adapted.diverged);
        // Balanced again well after the gust has passed.
        CHECK(adapted.quad->max_pendulum_error_tail(0.2) < 0.01);
    }
}

TEST_CASE("reference sampling improves the output match for every sample") {
    for (const Scenario& sc : scenario_reference_sampling(5, 2024)) {
        const RunResult adapted = execute_scenario(sc, 0);
        const RunResult unadapted = execute_scenario(sc, 0, AdjustmentSource::None);
        CHECK_FALSE(adapted.diverged);
        CHECK(adapted.rms_output_error() < unadapted.rms_output_error());
    }
}

TEST_CASE("quad_pend_axis_step physics") {
    SUBCASE("upright rest is an equilibrium") {
        const Vector next = quad_pend_axis_step(Vector::Zero(4), 0.0, 0.02, 0.5, 9.81);
        CHECK(next.norm() == 0.0);
    }

    SUBCASE("upright offset grows without control") {
        Vector state = Vector::Zero(4);
        state[2] = 0.05;
        for (int k = 0; k < 10; ++k) {
            state = quad_pend_axis_step(state, 0.0, 0.02, 0.5, 9.81);
        }
        CHECK(state[2] > 0.05);
        CHECK(state[2] < 0.5);  // still in the model's valid region
    }

    SUBCASE("acceleration pushes the pendulum the opposite way") {
        const Vector next = quad_pend_axis_step(Vector::Zero(4), 1.0, 0.02, 0.5, 9.81);
        CHECK(next[3] < 0.0);   // relative velocity reacts against the base
        CHECK(next[1] > 0.0);   // vehicle velocity follows the acceleration
    }
}
