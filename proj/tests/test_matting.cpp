#include "clicktrimap/matting.hpp"
#include "clicktrimap/util.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace clicktrimap;

TEST_CASE("compositing identities")
{
    std::mt19937_64 rng(1);
    const Image fg = oracle::random_image(rng, 8, 6);
    const Image bg = oracle::random_image(rng, 8, 6);
    CHECK(composite(fg, bg, AlphaMatte(8, 6, 1.0f)) == fg);
    CHECK(composite(fg, bg, AlphaMatte(8, 6, 0.0f)) == bg);
    AlphaMatte a(8, 6);
    for (auto& v : a.values()) {
        v = static_cast<float>(uniform01(rng));
    }
    const AlphaMatte back = recover_alpha(composite(fg, bg, a), fg, bg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(back[i] - a[i]) < 1e-6);
    }
    CHECK_THROWS_AS(composite(fg, bg, AlphaMatte(7, 6)), InvalidInput);
}

TEST_CASE("alpha recovery with identical layers yields zero")
{
    const Image same(3, 3, Rgb{0.3f, 0.3f, 0.3f});
    CHECK(recover_alpha(same, same, same) == AlphaMatte(3, 3, 0.0f));
}

TEST_CASE("metrics on hand-computed examples")
{
    AlphaMatte pred(2, 2, 0.0f);
    AlphaMatte gt(2, 2, 0.0f);
    pred[0] = 0.5f;
    gt[3] = 1.0f;
    const MetricReport m = compute_metrics(pred, gt);
    CHECK(m.mse == doctest::Approx(1e3 * (0.25 + 1.0) / 4));
    CHECK(m.sad == doctest::Approx(1.5 / 1e3));
    CHECK(m.mad == doctest::Approx(1.5 / 4));
    CHECK_FALSE(m.pixel_err.has_value());

    Trimap tp(2, 2, LabelClass::Background);
    Trimap tg(2, 2, LabelClass::Background);
    tg[1] = LabelClass::Unknown;
    const MetricReport with_t = compute_metrics(pred, gt, &tp, &tg);
    REQUIRE(with_t.pixel_err.has_value());
    CHECK(*with_t.pixel_err == 0.25);
    CHECK(compute_metrics(gt, gt).mse == 0.0);
    CHECK_THROWS_AS(compute_metrics(pred, AlphaMatte(3, 2)), InvalidInput);
}

TEST_CASE("trimap-guided alpha")
{
    Image img(10, 1, Rgb{0.5f, 0.5f, 0.5f});
    Trimap t(10, 1, LabelClass::Unknown);
    t(0, 0) = LabelClass::Foreground;
    t(9, 0) = LabelClass::Background;
    const AlphaMatte a = estimate_alpha(img, t);
    CHECK(a(0, 0) == 1.0f);
    CHECK(a(9, 0) == 0.0f);
    for (int x = 1; x < 9; ++x) {
        CHECK(a(x, 0) == doctest::Approx((9.0 - x) / 9.0).epsilon(1e-6));
        CHECK(a(x, 0) < a(x - 1, 0));
    }
    CHECK(estimate_alpha(img, Trimap(10, 1, LabelClass::Unknown)) == AlphaMatte(10, 1, 0.0f));
    Trimap no_b(10, 1, LabelClass::Unknown);
    no_b(0, 0) = LabelClass::Foreground;
    CHECK(estimate_alpha(img, no_b) == AlphaMatte(10, 1, 1.0f));
}

TEST_CASE("alpha of a perfect trimap is exact outside the unknown band")
{
    std::mt19937_64 rng(2);
    const Image img = oracle::random_image(rng, 12, 12);
    const Trimap t = oracle::random_trimap(rng, 12, 12, true);
    const AlphaMatte a = estimate_alpha(img, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == LabelClass::Foreground) {
            CHECK(a[i] == 1.0f);
        } else if (t[i] == LabelClass::Background) {
            CHECK(a[i] == 0.0f);
        } else {
            CHECK(a[i] >= 0.0f);
            CHECK(a[i] <= 1.0f);
        }
    }
}
