#pragma once

#include "clicktrimap/core_types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace clicktrimap {

using TrimapLogits = Raster<PerClass<double>>;

struct PredictorInput
{
    Image image;                       // at working resolution
    PerClass<BinaryMask> click_masks;  // from encode_clicks, same dimensions as image
    std::optional<Trimap> previous;    // the predictor's last output, if any

    void validate() const;
};

class Predictor
{
  public:
    virtual ~Predictor() = default;
    virtual TrimapLogits predict(const PredictorInput& input) const = 0;
    virtual std::string id() const = 0;
    /// Whether the output depends on PredictorInput::previous.
    virtual bool uses_previous() const { return false; }
    /// Predictors that must see the native raster (e.g. the oracle) skip resizing.
    virtual bool native_resolution() const { return false; }
};

/// Per-pixel argmax; ties go to the smaller LabelClass.
Trimap hard_trimap(const TrimapLogits& logits);
PerClass<double> softmax(const PerClass<double>& z);

class GeodesicPredictor : public Predictor
{
  public:
    static constexpr double kDefaultLambda = 10.0;
    static constexpr double kTemperature = 10.0;

    explicit GeodesicPredictor(double lambda = kDefaultLambda) : lambda_(lambda) {}
    TrimapLogits predict(const PredictorInput& input) const override;
    std::string id() const override { return "geodesic"; }

  private:
    double lambda_;
};

/// Stamps each click's disk with the click's class wherever the ground truth agrees,
/// leaving the rest of the previous prediction (initially all Background) unchanged.
class OraclePredictor : public Predictor
{
  public:
    explicit OraclePredictor(Trimap gt) : gt_(std::move(gt)) {}
    TrimapLogits predict(const PredictorInput& input) const override;
    std::string id() const override { return "oracle"; }
    bool uses_previous() const override { return true; }
    bool native_resolution() const override { return true; }

  private:
    Trimap gt_;
};

// ---------------------------------------------------------------------------------------------
// Small trainable perceptron.

inline constexpr int kFeatureDim = 11;
inline constexpr int kHidden1 = 32;
inline constexpr int kHidden2 = 32;
inline constexpr int kOutputDim = 3;
inline constexpr std::uint32_t kParamFileVersion = 1;

struct MlpParams
{
    int feature_dim = kFeatureDim;
    int hidden1 = kHidden1;
    int hidden2 = kHidden2;
    int output_dim = kOutputDim;
    // W1 (hidden1 x feature_dim, row-major), b1, W2 (hidden2 x hidden1), b2,
    // W3 (output_dim x hidden2), b3.
    std::vector<double> values;

    static std::size_t expected_size(int f, int h1, int h2, int o);
    std::size_t expected_size() const
    {
        return expected_size(feature_dim, hidden1, hidden2, output_dim);
    }

    static MlpParams zeros();
    /// He-uniform weights, zero biases.
    static MlpParams random(std::uint64_t seed);

    void validate() const;
};

/// Row-major pixel features, kFeatureDim per pixel: RGB, normalized x and y, per-class
/// geodesic distance to the class's clicks over the image diagonal (1 when the class has no
/// click), per-class click-disk indicator.
std::vector<double> pixel_features(const PredictorInput& input, double lambda);

struct MlpActivations
{
    std::vector<double> hidden1; // post-activation, n x h1
    std::vector<double> hidden2; // post-activation, n x h2
};

TrimapLogits mlp_forward(const MlpParams& params, std::span<const double> features, int width,
                         int height, MlpActivations* cache = nullptr);

/// Accumulates dL/dparams into `grad` (same layout as params.values) given dL/dlogits.
void mlp_backward(const MlpParams& params, std::span<const double> features,
                  const MlpActivations& cache, const TrimapLogits& dlogits,
                  std::vector<double>& grad);

class MlpPredictor : public Predictor
{
  public:
    explicit MlpPredictor(MlpParams params, double lambda = GeodesicPredictor::kDefaultLambda);
    TrimapLogits predict(const PredictorInput& input) const override;
    std::string id() const override { return "mlp"; }
    const MlpParams& params() const { return params_; }

  private:
    MlpParams params_;
    double lambda_;
};

/// Parameter file: 28-byte little-endian header {magic "TMLP", u32 version, u32 feature_dim,
/// u32 hidden1, u32 hidden2, u32 output_dim, u32 count} followed by `count` float32 values.
std::vector<std::uint8_t> serialize_params(const MlpParams& params);
MlpParams deserialize_params(std::span<const std::uint8_t> bytes);
void save_params(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_params(const std::filesystem::path& path);

// ---------------------------------------------------------------------------------------------
// Native <-> working resolution pipeline.

struct PreparedImage
{
    Image native;
    Image working;
};

/// `resolution` <= 0 keeps the native size; otherwise the working image is resolution^2.
PreparedImage prepare_image(Image native, int resolution);

Click to_working(const Click& c, int native_w, int native_h, int work_w, int work_h);

/// Runs `predictor` on the clicks (given in native coordinates) and returns the hard trimap
/// upscaled to native size by nearest neighbour.
Trimap predict_trimap(const Predictor& predictor, const PreparedImage& image,
                      std::span<const Click> clicks, const std::optional<Trimap>& previous,
                      int click_radius);

/// Prediction for a full click list replayed from an empty canvas.
Trimap replay_prediction(const Predictor& predictor, const PreparedImage& image,
                         std::span<const Click> clicks, int click_radius);

} // namespace clicktrimap
