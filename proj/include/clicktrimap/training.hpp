#pragma once

#include "clicktrimap/harness.hpp"
#include "clicktrimap/predictors.hpp"
#include "clicktrimap/simulation.hpp"
#include "clicktrimap/synthetic.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace clicktrimap {

struct NflResult
{
    double loss = 0.0;
    TrimapLogits grad; // dloss / dlogits
    bool fallback = false; // focal weights vanished; loss is mean cross-entropy
};

inline constexpr double kNflNormalizerFloor = 1e-12;

/// Normalized focal loss:
///   sum_ij -(1 - p_ij)^gamma log p_ij / sum_ij (1 - p_ij)^gamma,
/// p_ij = softmax confidence of the ground-truth class. The normalizer is differentiated.
NflResult nfl_loss(const TrimapLogits& logits, const Trimap& gt, double gamma);

class AdamOptimizer
{
  public:
    explicit AdamOptimizer(std::size_t size, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8);
    void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
    long steps() const { return t_; }

  private:
    double beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

struct TrainConfig
{
    int epochs = 25;
    int batch_size = 32;
    double learning_rate = 5e-4;
    double lr_decay = 0.1;   // multiplier applied from decay_epoch on
    int decay_epoch = -1;    // < 0: at 80% of the epochs
    int max_inner_iterations = 3;
    std::uint64_t rng_seed = 0;
    Policy policy = Policy::Cups;
    int resolution = 0;      // <= 0 trains at native size
    unsigned threads = 0;
    int eval_every = 1;      // evaluate on the held-out set every n epochs; 0 = never
    double geodesic_lambda = GeodesicPredictor::kDefaultLambda;

    void validate() const;
    double lr_at(int epoch) const;
};

struct TrainStepMetrics
{
    double mean_loss = 0.0;
    int samples = 0;
    int skipped = 0;
    int fallbacks = 0;
};

/// One optimizer update over `batch`: each sample gets an initial click, k ~ U{0..max_inner}
/// gradient-free click-injection iterations, then a final prediction scored with NFL.
TrainStepMetrics iterative_train_step(std::span<const SyntheticSample> batch, MlpParams& params,
                                      AdamOptimizer& optimizer, const TrainConfig& cfg,
                                      const SimulationConfig& sim_cfg, double lr,
                                      std::uint64_t step_seed);

struct TrainLogRow
{
    int epoch = 0;
    double mean_loss = 0.0;
    std::optional<double> eval_mse_alpha;
    std::optional<double> eval_pixel_err;
    std::optional<double> clicks_to_converge;
};

struct TrainResult
{
    MlpParams params;
    std::vector<TrainLogRow> log;
};

PredictorFactory mlp_factory(const MlpParams& params, double lambda);

TrainResult train(const std::vector<SyntheticSample>& train_set,
                  const std::vector<SyntheticSample>& eval_set, MlpParams init,
                  const TrainConfig& cfg, const SimulationConfig& sim_cfg,
                  const std::function<void(const TrainLogRow&)>& on_epoch = {});

std::string training_log_csv(const std::vector<TrainLogRow>& rows);

/// Mean clicks used per image (max_clicks for images that never converged).
double mean_clicks_to_converge(const EvalRun& run);

} // namespace clicktrimap
