#include "clicktrimap/harness.hpp"

#include "clicktrimap/util.hpp"

#include <algorithm>
#include <iostream>
#include <random>
#include <sstream>

namespace clicktrimap {

namespace {

MetricReport metrics_for(const PreparedImage& image, const Trimap& pred,
                         const SyntheticSample& sample)
{
    const AlphaMatte alpha = estimate_alpha(image.native, pred);
    return compute_metrics(alpha, sample.gt_alpha, &pred, &sample.gt_trimap);
}

MetricReport elementwise_min(const MetricReport& a, const MetricReport& b)
{
    MetricReport r;
    r.mse = std::min(a.mse, b.mse);
    r.sad = std::min(a.sad, b.sad);
    r.mad = std::min(a.mad, b.mad);
    r.pixel_err = std::min(a.pixel_err.value_or(0.0), b.pixel_err.value_or(0.0));
    return r;
}

struct Accumulator
{
    double mse = 0, sad = 0, mad = 0, pixel_err = 0;
    std::size_t n = 0;

    void add(const MetricReport& r)
    {
        mse += r.mse;
        sad += r.sad;
        mad += r.mad;
        pixel_err += r.pixel_err.value_or(0.0);
        ++n;
    }
    MetricReport mean() const
    {
        MetricReport r;
        if (n == 0) {
            r.pixel_err = 0.0;
            return r;
        }
        const double d = static_cast<double>(n);
        r.mse = mse / d;
        r.sad = sad / d;
        r.mad = mad / d;
        r.pixel_err = pixel_err / d;
        return r;
    }
};

ImageSeries evaluate_image(const SyntheticSample& sample, const Predictor& predictor,
                           Policy policy, const SimulationConfig& cfg, const EvalOptions& options,
                           std::size_t index)
{
    ImageSeries out;
    out.image_id = sample.id;
    require_same_shape(sample.image, sample.gt_trimap, "evaluate");
    require_same_shape(sample.image, sample.gt_alpha, "evaluate");

    const PreparedImage image = prepare_image(sample.image, options.resolution);
    std::mt19937_64 rng(mix_seed(options.seed, index));
    std::mt19937_64* rng_ptr = options.placement == ClickPlacement::UniformRandom ? &rng : nullptr;

    Trimap pred = predict_trimap(predictor, image, {}, std::nullopt, cfg.click_radius);
    out.initial = metrics_for(image, pred, sample);
    for (int n = 1; n <= cfg.max_clicks; ++n) {
        const StepOutcome step =
            simulate_step(pred, sample.gt_trimap, cfg, policy, n - 1, options.placement, rng_ptr);
        if (step.decision.converged()) {
            out.converged = true;
            break;
        }
        const Click click = *step.decision.next;
        out.clicks.push_back(click);
        out.trajectory.push_back(trajectory_record(click, policy, step.report));
        pred = predict_trimap(predictor, image, out.clicks, pred, cfg.click_radius);
        out.series.push_back(metrics_for(image, pred, sample));
    }
    if (!out.converged) {
        out.converged = count_mismatched(pred, sample.gt_trimap) == 0;
    }
    out.best = out.series.empty() ? out.initial : out.series.front();
    for (const MetricReport& r : out.series) {
        out.best = elementwise_min(out.best, r);
    }
    return out;
}

const MetricReport& value_at(const ImageSeries& s, int click)
{
    if (s.series.empty()) {
        return s.initial;
    }
    const auto idx = std::min(static_cast<std::size_t>(click - 1), s.series.size() - 1);
    return s.series[idx];
}

std::string metric_cells(const MetricReport& r)
{
    return format_number(r.mse) + "," + format_number(r.sad) + "," + format_number(r.mad) + "," +
           format_number(r.pixel_err.value_or(0.0));
}

} // namespace

EvalRun evaluate(const std::vector<SyntheticSample>& dataset, const PredictorFactory& factory,
                 Policy policy, const SimulationConfig& cfg, const EvalOptions& options)
{
    if (dataset.empty()) {
        throw InvalidInput("evaluate: empty dataset");
    }
    cfg.validate();
    EvalRun run;
    run.dataset_id = options.dataset_id;
    run.predictor_id = options.predictor_id;
    run.policy = policy;
    run.cfg = cfg;
    run.images.resize(dataset.size());

    parallel_for(dataset.size(), options.threads, [&](std::size_t i) {
        const SyntheticSample& sample = dataset[i];
        try {
            const auto predictor = factory(sample);
            run.images[i] = evaluate_image(sample, *predictor, policy, cfg, options, i);
        } catch (const InvalidInput& e) {
            ImageSeries skipped;
            skipped.image_id = sample.id;
            skipped.skipped = true;
            skipped.skip_reason = e.what();
            run.images[i] = std::move(skipped);
        }
    });

    Accumulator acc;
    for (const ImageSeries& s : run.images) {
        if (s.skipped) {
            std::cerr << "evaluate: skipped " << s.image_id << ": " << s.skip_reason << "\n";
            continue;
        }
        acc.add(s.best);
    }
    run.summary = acc.mean();
    return run;
}

std::vector<CurveRow> curve_report(const EvalRun& run)
{
    std::vector<CurveRow> rows;
    for (int n = 1; n <= run.cfg.max_clicks; ++n) {
        Accumulator acc;
        for (const ImageSeries& s : run.images) {
            if (!s.skipped) {
                acc.add(value_at(s, n));
            }
        }
        rows.push_back(CurveRow{n, acc.mean()});
    }
    return rows;
}

std::string_view to_string(SweepParameter p)
{
    return p == SweepParameter::AlphaThreshold ? "alpha" : "beta";
}

std::vector<SweepEntry> sweep(SweepParameter parameter, const std::vector<double>& values,
                              const std::vector<SyntheticSample>& dataset,
                              const PredictorFactory& factory, const SimulationConfig& base,
                              const EvalOptions& options, Policy policy)
{
    if (values.empty()) {
        throw InvalidInput("sweep: no parameter values");
    }
    std::vector<SweepEntry> out;
    for (double v : values) {
        SimulationConfig cfg = base;
        if (parameter == SweepParameter::AlphaThreshold) {
            cfg.alpha_threshold = v;
        } else {
            cfg.beta_threshold = v;
        }
        out.push_back(SweepEntry{v, evaluate(dataset, factory, policy, cfg, options)});
    }
    return out;
}

std::string series_csv(const EvalRun& run)
{
    std::ostringstream os;
    os << "image_id,click_count,mse,sad,mad,pixel_err\n";
    for (const ImageSeries& s : run.images) {
        if (s.skipped) {
            continue;
        }
        for (std::size_t k = 0; k < s.series.size(); ++k) {
            os << s.image_id << "," << (k + 1) << "," << metric_cells(s.series[k]) << "\n";
        }
    }
    return os.str();
}

std::string summary_csv(const EvalRun& run)
{
    std::ostringstream os;
    os << "image_id,clicks,converged,mse,sad,mad,pixel_err\n";
    for (const ImageSeries& s : run.images) {
        if (s.skipped) {
            continue;
        }
        os << s.image_id << "," << s.clicks.size() << "," << (s.converged ? 1 : 0) << ","
           << metric_cells(s.best) << "\n";
    }
    os << "mean,,," << metric_cells(run.summary) << "\n";
    return os.str();
}

std::string curve_csv(const std::vector<CurveRow>& curve)
{
    std::ostringstream os;
    os << "click,mse,sad,mad,pixel_err\n";
    for (const CurveRow& r : curve) {
        os << r.click << "," << metric_cells(r.mean) << "\n";
    }
    return os.str();
}

std::string sweep_csv(SweepParameter parameter, const std::vector<SweepEntry>& entries)
{
    std::ostringstream os;
    os << to_string(parameter) << ",mse,sad,mad,pixel_err\n";
    for (const SweepEntry& e : entries) {
        os << format_number(e.value) << "," << metric_cells(e.run.summary) << "\n";
    }
    return os.str();
}

nlohmann::json config_to_json(const SimulationConfig& cfg)
{
    return {{"alpha_threshold", cfg.alpha_threshold},
            {"beta_threshold", cfg.beta_threshold},
            {"gamma", cfg.gamma},
            {"max_clicks", cfg.max_clicks},
            {"click_radius", cfg.click_radius}};
}

void write_run_directory(const EvalRun& run, const std::filesystem::path& dir,
                         const nlohmann::json& manifest_extra)
{
    std::filesystem::create_directories(dir / "trajectories");
    write_text(dir / "curve.csv", curve_csv(curve_report(run)));
    write_text(dir / "summary.csv", summary_csv(run));
    write_text(dir / "series.csv", series_csv(run));
    for (const ImageSeries& s : run.images) {
        std::string lines;
        for (const auto& rec : s.trajectory) {
            lines += rec.dump() + "\n";
        }
        write_text(dir / "trajectories" / (s.image_id + ".jsonl"), lines);
    }
    nlohmann::json manifest = manifest_extra;
    manifest["dataset"] = run.dataset_id;
    manifest["predictor"] = run.predictor_id;
    manifest["policy"] = std::string(to_string(run.policy));
    manifest["cfg"] = config_to_json(run.cfg);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

} // namespace clicktrimap
