#include "clicktrimap/simulation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace clicktrimap;

namespace {

ErrorReport report_of(double df, double db, double du, double dt)
{
    ErrorReport r;
    r.d = {df, db, du};
    r.d_max = std::max({df, db, du});
    r.d_t = dt;
    r.e_level = r.d_max / dt;
    return r;
}

} // namespace

TEST_CASE("false-negative masks follow per-pixel enumeration")
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const int w = 1 + rng() % 16;
        const int h = 1 + rng() % 16;
        const Trimap pred = oracle::random_trimap(rng, w, h, rep % 2);
        Trimap gt = oracle::random_trimap(rng, w, h, rep % 2);
        gt(0, 0) = LabelClass::Foreground;
        const ErrorReport r = compute_error_report(pred, gt);
        for (LabelClass c : kAllClasses) {
            for (std::size_t i = 0; i < gt.size(); ++i) {
                REQUIRE(bool(r.fn_masks[index_of(c)][i]) == (gt[i] == c && pred[i] != c));
            }
            REQUIRE(r.d[index_of(c)] == max_of(oracle::brute_edt(r.fn_masks[index_of(c)])));
        }
    }
}

TEST_CASE("error report of a perfect prediction is converged")
{
    Trimap gt(10, 10, LabelClass::Background);
    gt(4, 4) = LabelClass::Foreground;
    const ErrorReport r = compute_error_report(gt, gt);
    CHECK(r.converged());
    CHECK(r.d_t == 1.0);
    CHECK(simulate_step(gt, gt, SimulationConfig{}, Policy::Cups, 0).decision.converged());
}

TEST_CASE("empty target is rejected")
{
    const Trimap gt(5, 5, LabelClass::Background);
    CHECK_THROWS_AS(compute_error_report(gt, gt), InvalidInput);
    CHECK_THROWS_AS(compute_error_report(Trimap(4, 5), Trimap(5, 5, LabelClass::Foreground)),
                    InvalidInput);
}

TEST_CASE("CUPS decision table")
{
    const SimulationConfig cfg;
    // Small overall error and a sizeable unknown error: unknown wins.
    CHECK(cups_next_class(report_of(0.5, 0.8, 2.5, 10.0), cfg) == LabelClass::Unknown);
    // Boundary values take the argmax branch.
    CHECK(cups_next_class(report_of(0.5, 2.5, 2.4, 25.0), cfg) == LabelClass::Background);
    CHECK(cups_next_class(report_of(0.5, 2.5, 2.4, 26.0), cfg) == LabelClass::Unknown);
    CHECK(cups_next_class(report_of(0.5, 2.0, 2.0, 40.0), cfg) == LabelClass::Background);
    CHECK(cups_next_class(report_of(2.0, 0.5, 2.0, 100.0), cfg) == LabelClass::Foreground);
    // Large error: argmax.
    CHECK(cups_next_class(report_of(5.0, 0.0, 3.0, 10.0), cfg) == LabelClass::Foreground);
    // Ties go to the earlier class.
    CHECK(itts_next_class(report_of(3.0, 3.0, 3.0, 10.0)) == LabelClass::Foreground);
    CHECK(itts_next_class(report_of(0.0, 3.0, 3.0, 10.0)) == LabelClass::Background);
    CHECK_THROWS(itts_next_class(report_of(0, 0, 0, 1)));
}

TEST_CASE("policy names")
{
    for (Policy p : {Policy::TwoClass, Policy::Itts, Policy::Cups}) {
        CHECK(policy_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(policy_from_string("random"), InvalidInput);
}

TEST_CASE("click lands at the interior of the chosen error region")
{
    Trimap gt(20, 20, LabelClass::Background);
    for (int y = 5; y < 12; ++y) {
        for (int x = 3; x < 10; ++x) {
            gt(x, y) = LabelClass::Foreground;
        }
    }
    const Trimap pred(20, 20, LabelClass::Background);
    const StepOutcome out = simulate_step(pred, gt, SimulationConfig{}, Policy::Itts, 4);
    REQUIRE(out.decision.next);
    CHECK(out.decision.next->label == LabelClass::Foreground);
    CHECK(out.decision.next->x == 6);
    CHECK(out.decision.next->y == 8);
    CHECK(out.decision.next->ordinal == 4);
}

TEST_CASE("two-class policy never emits unknown clicks")
{
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const Trimap pred = oracle::random_trimap(rng, 12, 12, true);
        Trimap gt = oracle::random_trimap(rng, 12, 12, true);
        gt(3, 3) = LabelClass::Unknown;
        const StepOutcome out = simulate_step(pred, gt, SimulationConfig{}, Policy::TwoClass, 0);
        if (out.decision.next) {
            CHECK(out.decision.next->label != LabelClass::Unknown);
        }
    }
    // A prediction that confuses only F and U is already correct for two classes.
    Trimap gt(6, 6, LabelClass::Background);
    gt(1, 1) = LabelClass::Unknown;
    Trimap pred = gt;
    pred(1, 1) = LabelClass::Foreground;
    CHECK(simulate_step(pred, gt, SimulationConfig{}, Policy::TwoClass, 0).decision.converged());
    CHECK_FALSE(simulate_step(pred, gt, SimulationConfig{}, Policy::Itts, 0).decision.converged());
}

TEST_CASE("random placement stays inside the false-negative region")
{
    std::mt19937_64 gen(9);
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 50; ++rep) {
        const Trimap pred = oracle::random_trimap(gen, 15, 15, true);
        Trimap gt = oracle::random_trimap(gen, 15, 15, true);
        gt(0, 0) = LabelClass::Foreground;
        const StepOutcome out = simulate_step(pred, gt, SimulationConfig{}, Policy::Cups, 0,
                                              ClickPlacement::UniformRandom, &rng);
        if (out.decision.next) {
            const Click& c = *out.decision.next;
            CHECK(out.report.fn_masks[index_of(c.label)](c.x, c.y));
        }
    }
}

TEST_CASE("trajectory record fields")
{
    const auto j = trajectory_record(Click{1, 2, LabelClass::Unknown, 3}, Policy::Cups,
                                     report_of(1, 2, 3, 4));
    CHECK(j.at("class") == "U");
    CHECK(j.at("x") == 1);
    CHECK(j.at("ordinal") == 3);
    CHECK(j.at("policy") == "cups");
    CHECK(j.at("e_level").get<double>() == 0.75);
}
