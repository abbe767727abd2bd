#pragma once

#include "clicktrimap/core_types.hpp"
#include "clicktrimap/raster_ops.hpp"

#include <json.hpp>

#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace clicktrimap {

/// Per-class false-negative regions of a prediction and their sizes.
struct ErrorReport
{
    PerClass<BinaryMask> fn_masks;
    PerClass<double> d{0.0, 0.0, 0.0}; // max distance transform of each FN mask
    double d_max = 0.0;
    double d_t = 0.0;                  // max distance transform of the gt target (F or U)
    double e_level = 0.0;              // d_max / d_t

    bool converged() const { return d_max <= 0.0; }
};

enum class Policy { TwoClass, Itts, Cups };

std::string_view to_string(Policy p);
Policy policy_from_string(std::string_view s);

enum class ClickPlacement {
    Center,        // distance-transform argmax of the FN region
    UniformRandom, // uniform over FN pixels, seed-controlled
};

struct PolicyDecision
{
    std::optional<Click> next;
    bool converged() const { return !next.has_value(); }
};

struct StepOutcome
{
    PolicyDecision decision;
    ErrorReport report; // for TwoClass, the report of the collapsed (F or U vs B) problem
};

ErrorReport compute_error_report(const Trimap& pred, const Trimap& gt);

LabelClass itts_next_class(const ErrorReport& r);
LabelClass cups_next_class(const ErrorReport& r, const SimulationConfig& cfg);

Click sample_click(const ErrorReport& r, LabelClass c, int ordinal);
Click sample_click_random(const ErrorReport& r, LabelClass c, int ordinal, std::mt19937_64& rng);

/// One simulated user interaction. `rng` is used only for ClickPlacement::UniformRandom.
StepOutcome simulate_step(const Trimap& pred, const Trimap& gt, const SimulationConfig& cfg,
                          Policy policy, int ordinal,
                          ClickPlacement placement = ClickPlacement::Center,
                          std::mt19937_64* rng = nullptr);

/// Trajectory log record {ordinal, policy, class, x, y, d_F, d_B, d_U, d_t, e_level}.
nlohmann::json trajectory_record(const Click& click, Policy policy, const ErrorReport& r);

} // namespace clicktrimap
