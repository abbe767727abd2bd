#include "clicktrimap/predictors.hpp"
#include "clicktrimap/util.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace clicktrimap;

namespace {

PredictorInput input_with(const Image& img, const std::vector<Click>& clicks, int radius = 2)
{
    return PredictorInput{img, encode_clicks(clicks, img.width(), img.height(), radius), std::nullopt};
}

double relu(double v) { return v > 0 ? v : 0; }

// Straight-line evaluation of the perceptron for one pixel.
PerClass<double> naive_mlp(const MlpParams& p, const double* f)
{
    const double* w1 = p.values.data();
    const double* b1 = w1 + p.hidden1 * p.feature_dim;
    const double* w2 = b1 + p.hidden1;
    const double* b2 = w2 + p.hidden2 * p.hidden1;
    const double* w3 = b2 + p.hidden2;
    const double* b3 = w3 + p.output_dim * p.hidden2;
    std::vector<double> h1(p.hidden1), h2(p.hidden2);
    for (int j = 0; j < p.hidden1; ++j) {
        double s = b1[j];
        for (int k = 0; k < p.feature_dim; ++k) {
            s += w1[j * p.feature_dim + k] * f[k];
        }
        h1[j] = relu(s);
    }
    for (int j = 0; j < p.hidden2; ++j) {
        double s = b2[j];
        for (int k = 0; k < p.hidden1; ++k) {
            s += w2[j * p.hidden1 + k] * h1[k];
        }
        h2[j] = relu(s);
    }
    PerClass<double> out{};
    for (int j = 0; j < 3; ++j) {
        double s = b3[j];
        for (int k = 0; k < p.hidden2; ++k) {
            s += w3[j * p.hidden2 + k] * h2[k];
        }
        out[j] = s;
    }
    return out;
}

} // namespace

TEST_CASE("geodesic predictor without clicks is all background")
{
    std::mt19937_64 rng(1);
    const Image img = oracle::random_image(rng, 9, 7);
    const Trimap t = hard_trimap(GeodesicPredictor().predict(input_with(img, {})));
    CHECK(t == Trimap(9, 7, LabelClass::Background));
}

TEST_CASE("geodesic predictor with a single class labels everything with it")
{
    std::mt19937_64 rng(2);
    const Image img = oracle::random_image(rng, 12, 12);
    for (LabelClass c : kAllClasses) {
        const Trimap t = hard_trimap(GeodesicPredictor().predict(input_with(img, {{3, 4, c, 0}})));
        CHECK(t == Trimap(12, 12, c));
    }
}

TEST_CASE("geodesic predictor follows colour edges")
{
    Image img(20, 10, Rgb{0.1f, 0.1f, 0.1f});
    for (int y = 0; y < 10; ++y) {
        for (int x = 12; x < 20; ++x) {
            img(x, y) = Rgb{0.9f, 0.9f, 0.9f};
        }
    }
    // The F click sits far from the edge; B is close to it but on the other side.
    const Trimap t = hard_trimap(GeodesicPredictor().predict(
        input_with(img, {{1, 5, LabelClass::Foreground, 0}, {13, 5, LabelClass::Background, 1}}, 0)));
    for (int y = 0; y < 10; ++y) {
        CHECK(t(11, y) == LabelClass::Foreground);
        CHECK(t(12, y) == LabelClass::Background);
    }
}

TEST_CASE("hard trimap ties and softmax")
{
    TrimapLogits z(2, 1);
    z(0, 0) = {1.0, 1.0, 1.0};
    z(1, 0) = {0.0, 2.0, 2.0};
    const Trimap t = hard_trimap(z);
    CHECK(t(0, 0) == LabelClass::Foreground);
    CHECK(t(1, 0) == LabelClass::Background);
    const auto p = softmax({1000.0, 0.0, -1000.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(p[2]));
    const auto q = softmax({0.0, std::log(2.0), std::log(3.0)});
    CHECK(q[2] == doctest::Approx(0.5));
}

TEST_CASE("oracle predictor stamps only ground-truth agreeing pixels")
{
    Trimap gt(10, 10, LabelClass::Background);
    for (int x = 0; x < 10; ++x) {
        gt(x, 4) = LabelClass::Foreground;
    }
    OraclePredictor oracle_pred(gt);
    const Image img(10, 10);
    auto in = input_with(img, {{5, 4, LabelClass::Foreground, 0}}, 3);
    const Trimap t = hard_trimap(oracle_pred.predict(in));
    for (int x = 0; x < 10; ++x) {
        CHECK(t(x, 4) == (std::abs(x - 5) <= 3 ? LabelClass::Foreground : LabelClass::Background));
    }
    CHECK(count_label(t, LabelClass::Foreground) == 7);
    CHECK(oracle_pred.uses_previous());
}

TEST_CASE("perceptron forward matches straight-line evaluation")
{
    std::mt19937_64 rng(3);
    const MlpParams p = MlpParams::random(42);
    CHECK(p.values.size() == p.expected_size());
    const Image img = oracle::random_image(rng, 6, 5);
    const auto in = input_with(img, {{1, 1, LabelClass::Foreground, 0}, {4, 3, LabelClass::Unknown, 1}});
    const auto f = pixel_features(in, 10.0);
    REQUIRE(f.size() == 30 * kFeatureDim);
    const TrimapLogits z = mlp_forward(p, f, 6, 5);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const auto want = naive_mlp(p, f.data() + i * kFeatureDim);
        for (int c = 0; c < 3; ++c) {
            CHECK(z[i][c] == doctest::Approx(want[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("pixel features")
{
    const Image img(4, 4, Rgb{0.2f, 0.4f, 0.6f});
    const auto in = input_with(img, {{0, 0, LabelClass::Background, 0}}, 0);
    const auto f = pixel_features(in, 10.0);
    const double* px = f.data();
    CHECK(px[0] == doctest::Approx(0.2));
    CHECK(px[5] == 1.0);  // no F click
    CHECK(px[6] == 0.0);  // on the B click
    CHECK(px[7] == 1.0);  // no U click
    CHECK(px[9] == 1.0);  // inside the B disk
    const double* last = f.data() + 15 * kFeatureDim;
    CHECK(last[6] == doctest::Approx(3 * std::sqrt(2.0) / std::hypot(4.0, 4.0)));
    CHECK(last[9] == 0.0);
}

TEST_CASE("perceptron backward matches finite differences")
{
    std::mt19937_64 rng(4);
    MlpParams p = MlpParams::random(7);
    for (double& v : p.values) {
        v += 0.01 * (uniform01(rng) - 0.5); // move biases off zero
    }
    const Image img = oracle::random_image(rng, 4, 3);
    const auto in = input_with(img, {{0, 0, LabelClass::Foreground, 0}, {3, 2, LabelClass::Background, 1}}, 1);
    const auto f = pixel_features(in, 10.0);
    // Loss = sum of logits weighted by fixed random coefficients.
    TrimapLogits coef(4, 3);
    for (auto& c : coef.values()) {
        c = {uniform01(rng) - 0.5, uniform01(rng) - 0.5, uniform01(rng) - 0.5};
    }
    auto loss = [&](const MlpParams& q) {
        const TrimapLogits z = mlp_forward(q, f, 4, 3);
        double s = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            for (int c = 0; c < 3; ++c) {
                s += coef[i][c] * z[i][c];
            }
        }
        return s;
    };
    MlpActivations cache;
    mlp_forward(p, f, 4, 3, &cache);
    std::vector<double> grad(p.values.size(), 0.0);
    mlp_backward(p, f, cache, coef, grad);
    const double h = 1e-6;
    int checked = 0;
    for (std::size_t k = 0; k < p.values.size(); k += 7) {
        MlpParams a = p, b = p;
        a.values[k] += h;
        b.values[k] -= h;
        const double fd = (loss(a) - loss(b)) / (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("parameter file round trip and rejection")
{
    const MlpParams p = MlpParams::random(9);
    const auto bytes = serialize_params(p);
    CHECK(bytes.size() == 28 + 4 * p.values.size());
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TMLP");
    const MlpParams q = deserialize_params(bytes);
    REQUIRE(q.values.size() == p.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        CHECK(q.values[i] == static_cast<double>(static_cast<float>(p.values[i])));
    }
    CHECK(serialize_params(q) == bytes);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_params(bad_magic), InvalidInput);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(deserialize_params(truncated), InvalidInput);
    auto bad_version = bytes;
    bad_version[4] = 9;
    CHECK_THROWS_AS(deserialize_params(bad_version), InvalidInput);
    CHECK_THROWS_AS(deserialize_params(std::vector<std::uint8_t>{1, 2, 3}), InvalidInput);

    const auto path = std::filesystem::temp_directory_path() / "clicktrimap_params_test.bin";
    save_params(p, path);
    CHECK(serialize_params(load_params(path)) == bytes);
    std::filesystem::remove(path);
    CHECK_THROWS(load_params(path));
}

TEST_CASE("working resolution round trip")
{
    std::mt19937_64 rng(5);
    const Image img = oracle::random_image(rng, 30, 20);
    const PreparedImage same = prepare_image(img, 0);
    CHECK(same.working == img);
    const PreparedImage small = prepare_image(img, 16);
    CHECK(small.working.width() == 16);
    CHECK(small.working.height() == 16);
    const Click c = to_working(Click{29, 19, LabelClass::Unknown, 2}, 30, 20, 16, 16);
    CHECK(c.x == 15);
    CHECK(c.y == 15);
    CHECK(c.label == LabelClass::Unknown);
    const Trimap t = predict_trimap(GeodesicPredictor(), small, std::vector<Click>{{2, 2, LabelClass::Foreground, 0}},
                                    std::nullopt, 2);
    CHECK(t == Trimap(30, 20, LabelClass::Foreground));
    CHECK_THROWS_AS(predict_trimap(GeodesicPredictor(), small,
                                   std::vector<Click>{{30, 2, LabelClass::Foreground, 0}}, std::nullopt, 2),
                    InvalidInput);
}

TEST_CASE("replay of a stateful predictor equals sequential prediction")
{
    std::mt19937_64 rng(6);
    const Trimap gt = oracle::random_trimap(rng, 16, 16, true);
    OraclePredictor pred(gt);
    const PreparedImage img = prepare_image(Image(16, 16), 0);
    std::vector<Click> clicks;
    std::optional<Trimap> prev;
    for (int k = 0; k < 5; ++k) {
        clicks.push_back(Click{int(rng() % 16), int(rng() % 16), static_cast<LabelClass>(rng() % 3), k});
        prev = predict_trimap(pred, img, std::span(clicks).last(1), prev, 3);
    }
    CHECK(replay_prediction(pred, img, clicks, 3) == *prev);
}
