#pragma once

#include "clicktrimap/matting.hpp"
#include "clicktrimap/predictors.hpp"
#include "clicktrimap/simulation.hpp"
#include "clicktrimap/synthetic.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace clicktrimap {

/// Builds the predictor for one image; the oracle predictor needs that image's ground truth.
using PredictorFactory = std::function<std::shared_ptr<const Predictor>(const SyntheticSample&)>;

struct EvalOptions
{
    int resolution = 0; // working resolution; <= 0 keeps native size
    unsigned threads = 0;
    ClickPlacement placement = ClickPlacement::Center;
    std::uint64_t seed = 0; // only consumed by random placement
    std::string dataset_id = "dataset";
    std::string predictor_id = "predictor";
};

struct ImageSeries
{
    std::string image_id;
    MetricReport initial;              // before any click
    std::vector<MetricReport> series;  // after click 1..n
    std::vector<Click> clicks;
    std::vector<nlohmann::json> trajectory;
    MetricReport best;                 // per-metric minimum over the series
    bool converged = false;
    bool skipped = false;
    std::string skip_reason;
};

struct EvalRun
{
    std::string dataset_id;
    std::string predictor_id;
    Policy policy = Policy::Cups;
    SimulationConfig cfg;
    std::vector<ImageSeries> images;
    MetricReport summary; // mean over evaluated images of the per-image best
};

EvalRun evaluate(const std::vector<SyntheticSample>& dataset, const PredictorFactory& factory,
                 Policy policy, const SimulationConfig& cfg, const EvalOptions& options);

struct CurveRow
{
    int click = 0;
    MetricReport mean;
};

/// Mean metric after click n for n = 1..max_clicks; converged images hold their final value.
std::vector<CurveRow> curve_report(const EvalRun& run);

enum class SweepParameter { AlphaThreshold, BetaThreshold };
std::string_view to_string(SweepParameter p);

struct SweepEntry
{
    double value = 0.0;
    EvalRun run;
};

std::vector<SweepEntry> sweep(SweepParameter parameter, const std::vector<double>& values,
                              const std::vector<SyntheticSample>& dataset,
                              const PredictorFactory& factory, const SimulationConfig& base,
                              const EvalOptions& options, Policy policy = Policy::Cups);

std::string series_csv(const EvalRun& run);
std::string summary_csv(const EvalRun& run);
std::string curve_csv(const std::vector<CurveRow>& curve);
std::string sweep_csv(SweepParameter parameter, const std::vector<SweepEntry>& entries);

nlohmann::json config_to_json(const SimulationConfig& cfg);

/// Writes curve.csv, summary.csv, series.csv, trajectories/<image>.jsonl and manifest.json.
void write_run_directory(const EvalRun& run, const std::filesystem::path& dir,
                         const nlohmann::json& manifest_extra);

} // namespace clicktrimap
