#include "clicktrimap/training.hpp"

#include "clicktrimap/raster_ops.hpp"
#include "clicktrimap/util.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace clicktrimap {

NflResult nfl_loss(const TrimapLogits& logits, const Trimap& gt, double gamma)
{
    require_same_shape(logits, gt, "nfl_loss");
    if (!(gamma >= 0.0)) {
        throw InvalidInput("nfl_loss: gamma must be >= 0");
    }
    const std::size_t n = logits.size();
    std::vector<double> p(n), log_p(n), w(n);
    PerClass<double> zero{0.0, 0.0, 0.0};
    std::vector<PerClass<double>> soft(n, zero);

    double weighted = 0.0;
    double normalizer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& z = logits[i];
        const double m = std::max({z[0], z[1], z[2]});
        const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m) + std::exp(z[2] - m));
        for (std::size_t k = 0; k < 3; ++k) {
            soft[i][k] = std::exp(z[k] - lse);
        }
        const std::size_t g = index_of(gt[i]);
        log_p[i] = z[g] - lse;
        p[i] = soft[i][g];
        w[i] = std::pow(1.0 - p[i], gamma);
        weighted += -w[i] * log_p[i];
        normalizer += w[i];
    }

    NflResult out;
    out.grad = TrimapLogits(logits.width(), logits.height(), zero);
    if (normalizer < kNflNormalizerFloor) {
        out.fallback = true;
        double ce = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ce += -log_p[i];
            const std::size_t g = index_of(gt[i]);
            for (std::size_t k = 0; k < 3; ++k) {
                out.grad[i][k] = (soft[i][k] - (k == g ? 1.0 : 0.0)) / static_cast<double>(n);
            }
        }
        out.loss = ce / static_cast<double>(n);
        return out;
    }

    const double loss = weighted / normalizer;
    out.loss = loss;
    for (std::size_t i = 0; i < n; ++i) {
        // dw/dp = -gamma (1 - p)^(gamma - 1); the gamma = 0 case has no weight gradient.
        const double q = 1.0 - p[i];
        double dw_dp = 0.0;
        if (gamma != 0.0) {
            dw_dp = q > 0.0 ? -gamma * std::pow(q, gamma - 1.0) : (gamma == 1.0 ? -1.0 : 0.0);
        }
        const double ell = -log_p[i];
        // dL/dp * p, with d(-log p)/dp * p = -1.
        const double dl_dp_times_p = (dw_dp * (ell - loss) * p[i] - w[i]) / normalizer;
        const std::size_t g = index_of(gt[i]);
        for (std::size_t k = 0; k < 3; ++k) {
            out.grad[i][k] = dl_dp_times_p * ((k == g ? 1.0 : 0.0) - soft[i][k]);
        }
    }
    return out;
}

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0)
{
}

void AdamOptimizer::step(std::vector<double>& params, const std::vector<double>& grad, double lr)
{
    if (params.size() != m_.size() || grad.size() != m_.size()) {
        throw InvalidInput("adam: parameter/gradient size mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
}

void TrainConfig::validate() const
{
    if (epochs < 0 || batch_size < 1 || max_inner_iterations < 0 || !(learning_rate > 0.0)) {
        throw InvalidInput("train config: epochs >= 0, batch_size >= 1, max_inner_iterations >= 0 "
                           "and learning_rate > 0 required");
    }
}

double TrainConfig::lr_at(int epoch) const
{
    const int decay = decay_epoch >= 0 ? decay_epoch : (epochs * 4) / 5;
    return epoch >= decay && decay > 0 ? learning_rate * lr_decay : learning_rate;
}

namespace {

struct SampleGradient
{
    std::vector<double> grad;
    double loss = 0.0;
    bool skipped = false;
    bool fallback = false;
};

SampleGradient sample_gradient(const SyntheticSample& sample, const MlpParams& params,
                               const TrainConfig& cfg, const SimulationConfig& sim_cfg,
                               std::uint64_t seed)
{
    SampleGradient out;
    Image image = sample.image;
    Trimap gt = sample.gt_trimap;
    if (cfg.resolution > 0 &&
        (image.width() != cfg.resolution || image.height() != cfg.resolution)) {
        image = resize_bilinear(image, cfg.resolution, cfg.resolution);
        gt = resize_nearest(gt, cfg.resolution, cfg.resolution);
    }
    const BinaryMask gt_fg = trimap_to_mask(gt, LabelClass::Foreground);
    const BinaryMask gt_unknown = trimap_to_mask(gt, LabelClass::Unknown);
    const bool has_fg = count_true(gt_fg) > 0;
    if (!has_fg && count_true(gt_unknown) == 0) {
        std::cerr << "train: skipping " << sample.id << " (all-background ground truth)\n";
        out.skipped = true;
        return out;
    }

    std::mt19937_64 rng(seed);
    std::vector<Click> clicks;
    {
        const PixelPos p = argmax_pixel(distance_transform(has_fg ? gt_fg : gt_unknown));
        clicks.push_back(Click{p.x, p.y, has_fg ? LabelClass::Foreground : LabelClass::Unknown, 0});
    }

    auto make_input = [&] {
        PredictorInput in;
        in.image = image;
        in.click_masks = encode_clicks(clicks, image.width(), image.height(), sim_cfg.click_radius);
        return in;
    };

    const int inner = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.max_inner_iterations + 1));
    for (int k = 0; k < inner; ++k) {
        const auto feats = pixel_features(make_input(), cfg.geodesic_lambda);
        const Trimap pred = hard_trimap(mlp_forward(params, feats, image.width(), image.height()));
        const StepOutcome step = simulate_step(pred, gt, sim_cfg, cfg.policy,
                                               static_cast<int>(clicks.size()));
        if (step.decision.converged()) {
            break;
        }
        clicks.push_back(*step.decision.next);
    }

    const auto feats = pixel_features(make_input(), cfg.geodesic_lambda);
    MlpActivations cache;
    const TrimapLogits logits = mlp_forward(params, feats, image.width(), image.height(), &cache);
    const NflResult nfl = nfl_loss(logits, gt, sim_cfg.gamma);
    out.loss = nfl.loss;
    out.fallback = nfl.fallback;
    out.grad.assign(params.values.size(), 0.0);
    mlp_backward(params, feats, cache, nfl.grad, out.grad);
    return out;
}

} // namespace

TrainStepMetrics iterative_train_step(std::span<const SyntheticSample> batch, MlpParams& params,
                                      AdamOptimizer& optimizer, const TrainConfig& cfg,
                                      const SimulationConfig& sim_cfg, double lr,
                                      std::uint64_t step_seed)
{
    std::vector<SampleGradient> per_sample(batch.size());
    parallel_for(batch.size(), cfg.threads, [&](std::size_t i) {
        per_sample[i] = sample_gradient(batch[i], params, cfg, sim_cfg, mix_seed(step_seed, i));
    });

    TrainStepMetrics m;
    std::vector<double> grad(params.values.size(), 0.0);
    double loss_sum = 0.0;
    for (const SampleGradient& s : per_sample) {
        if (s.skipped) {
            ++m.skipped;
            continue;
        }
        ++m.samples;
        m.fallbacks += s.fallback ? 1 : 0;
        loss_sum += s.loss;
        for (std::size_t k = 0; k < grad.size(); ++k) {
            grad[k] += s.grad[k];
        }
    }
    if (m.samples == 0) {
        return m;
    }
    for (double& g : grad) {
        g /= m.samples;
    }
    m.mean_loss = loss_sum / m.samples;
    optimizer.step(params.values, grad, lr);
    return m;
}

PredictorFactory mlp_factory(const MlpParams& params, double lambda)
{
    auto predictor = std::make_shared<const MlpPredictor>(params, lambda);
    return [predictor](const SyntheticSample&) { return predictor; };
}

double mean_clicks_to_converge(const EvalRun& run)
{
    double total = 0.0;
    int n = 0;
    for (const ImageSeries& s : run.images) {
        if (s.skipped) {
            continue;
        }
        total += s.converged ? static_cast<double>(s.clicks.size()) : run.cfg.max_clicks;
        ++n;
    }
    return n > 0 ? total / n : 0.0;
}

TrainResult train(const std::vector<SyntheticSample>& train_set,
                  const std::vector<SyntheticSample>& eval_set, MlpParams init,
                  const TrainConfig& cfg, const SimulationConfig& sim_cfg,
                  const std::function<void(const TrainLogRow&)>& on_epoch)
{
    cfg.validate();
    sim_cfg.validate();
    init.validate();
    TrainResult result;
    result.params = std::move(init);
    AdamOptimizer optimizer(result.params.values.size());

    std::vector<std::size_t> order(train_set.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 shuffle_rng(mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng() % i)]);
        }

        double loss_sum = 0.0;
        int loss_batches = 0;
        for (std::size_t start = 0, b = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++b) {
            std::vector<SyntheticSample> batch;
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(train_set[order[k]]);
            }
            const std::uint64_t step_seed =
                mix_seed(mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(epoch) + 1000003), b);
            const TrainStepMetrics m = iterative_train_step(batch, result.params, optimizer, cfg,
                                                            sim_cfg, cfg.lr_at(epoch), step_seed);
            if (m.samples > 0) {
                loss_sum += m.mean_loss;
                ++loss_batches;
            }
        }

        TrainLogRow row;
        row.epoch = epoch + 1;
        row.mean_loss = loss_batches > 0 ? loss_sum / loss_batches : 0.0;
        const bool last = epoch + 1 == cfg.epochs;
        if (!eval_set.empty() && cfg.eval_every > 0 && ((epoch + 1) % cfg.eval_every == 0 || last)) {
            EvalOptions opts;
            opts.resolution = cfg.resolution;
            opts.threads = cfg.threads;
            const EvalRun run = evaluate(eval_set, mlp_factory(result.params, cfg.geodesic_lambda),
                                         cfg.policy, sim_cfg, opts);
            row.eval_mse_alpha = run.summary.mse;
            row.eval_pixel_err = run.summary.pixel_err;
            row.clicks_to_converge = mean_clicks_to_converge(run);
        }
        result.log.push_back(row);
        if (on_epoch) {
            on_epoch(row);
        }
    }
    return result;
}

std::string training_log_csv(const std::vector<TrainLogRow>& rows)
{
    auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    std::ostringstream os;
    os << "epoch,mean_loss,eval_mse_alpha,eval_pixel_err,clicks_to_converge\n";
    for (const TrainLogRow& r : rows) {
        os << r.epoch << "," << format_number(r.mean_loss) << "," << cell(r.eval_mse_alpha) << ","
           << cell(r.eval_pixel_err) << "," << cell(r.clicks_to_converge) << "\n";
    }
    return os.str();
}

} // namespace clicktrimap
