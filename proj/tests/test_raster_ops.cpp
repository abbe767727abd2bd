#include "clicktrimap/raster_ops.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace clicktrimap;

TEST_CASE("distance transform equals brute force")
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 150; ++rep) {
        const int w = 1 + rng() % 24;
        const int h = 1 + rng() % 24;
        const BinaryMask m = rep % 2 ? oracle::random_mask(rng, w, h, 0.3 + 0.6 * (rep % 5) / 4.0)
                                     : oracle::random_shapes(rng, w, h);
        REQUIRE(distance_transform(m) == oracle::brute_edt(m));
    }
}

TEST_CASE("ring-search reference agrees with exhaustive search")
{
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 60; ++rep) {
        const int w = 1 + rng() % 20;
        const int h = 1 + rng() % 20;
        const BinaryMask m = rep % 2 ? oracle::random_mask(rng, w, h, 0.8) : oracle::random_shapes(rng, w, h);
        REQUIRE(oracle::ring_search_edt(m) == oracle::brute_edt(m));
    }
}

TEST_CASE("distance transform special cases")
{
    CHECK(max_of(distance_transform(BinaryMask(7, 5, 0))) == 0.0);
    BinaryMask one(5, 5, 0);
    one(2, 2) = 1;
    CHECK(distance_transform(one)(2, 2) == 1.0);
    // All-true: nearest false lies just outside the border.
    const DistanceMap full = distance_transform(BinaryMask(9, 9, 1));
    CHECK(full(4, 4) == 5.0);
    CHECK(full(0, 0) == 1.0);
}

TEST_CASE("argmax ties go to the first row-major pixel")
{
    DistanceMap d(4, 3, 0.0);
    d(3, 0) = 2.0;
    d(1, 2) = 2.0;
    CHECK(argmax_pixel(d) == PixelPos{3, 0});
    CHECK_THROWS_AS(argmax_pixel(DistanceMap(2, 2, 0.0)), InvalidInput);
}

TEST_CASE("dilation matches brute force and erosion is its dual")
{
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 60; ++rep) {
        const int w = 1 + rng() % 20;
        const int h = 1 + rng() % 20;
        const int r = rng() % 5;
        const BinaryMask m = oracle::random_mask(rng, w, h, 0.1);
        REQUIRE(dilate(m, r) == oracle::brute_dilate(m, r));
        REQUIRE(erode(m, r) == mask_not(oracle::brute_dilate(mask_not(m), r)));
    }
    CHECK_THROWS_AS(dilate(BinaryMask(2, 2, 0), -1), InvalidInput);
    CHECK(dilate(BinaryMask(3, 3, 0), 4) == BinaryMask(3, 3, 0));
}

TEST_CASE("boolean mask algebra")
{
    std::mt19937_64 rng(4);
    const BinaryMask a = oracle::random_mask(rng, 8, 8, 0.5);
    const BinaryMask b = oracle::random_mask(rng, 8, 8, 0.5);
    CHECK(mask_not(mask_and(a, b)) == mask_or(mask_not(a), mask_not(b)));
    CHECK(mask_not(mask_not(a)) == a);
    CHECK_THROWS_AS(mask_and(a, BinaryMask(7, 8, 0)), InvalidInput);
}

TEST_CASE("geodesic distance equals Bellman-Ford relaxation")
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const int w = 1 + rng() % 14;
        const int h = 1 + rng() % 14;
        const Image img = oracle::random_image(rng, w, h);
        BinaryMask seeds = oracle::random_mask(rng, w, h, 0.05);
        seeds(rng() % w, rng() % h) = 1;
        const double lambda = rep % 3 == 0 ? 0.0 : 10.0;
        const GeodesicField got = geodesic_distance(img, seeds, lambda);
        const GeodesicField want = oracle::bellman_ford_geodesic(img, seeds, lambda);
        for (std::size_t i = 0; i < got.size(); ++i) {
            REQUIRE(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(geodesic_distance(Image(3, 3), BinaryMask(3, 3, 0), 1.0), InvalidInput);
}

TEST_CASE("geodesic distance on a flat image is the octile distance")
{
    BinaryMask seed(6, 6, 0);
    seed(0, 0) = 1;
    const GeodesicField g = geodesic_distance(Image(6, 6, Rgb{0.5f, 0.5f, 0.5f}), seed, 10.0);
    CHECK(g(5, 5) == doctest::Approx(5 * std::sqrt(2.0)));
    CHECK(g(5, 2) == doctest::Approx(3 + 2 * std::sqrt(2.0)));
}

TEST_CASE("resizing")
{
    std::mt19937_64 rng(6);
    const Image img = oracle::random_image(rng, 7, 5);
    CHECK(resize_bilinear(img, 7, 5) == img);
    const Image flat(4, 4, Rgb{0.25f, 0.5f, 1.0f});
    const Image big = resize_bilinear(flat, 9, 13);
    for (const Rgb& p : big.values()) {
        CHECK(p.r == doctest::Approx(0.25f));
        CHECK(p.b == doctest::Approx(1.0f));
    }
    Trimap t(2, 2, LabelClass::Background);
    t(1, 1) = LabelClass::Unknown;
    const Trimap up = resize_nearest(t, 4, 4);
    CHECK(up(3, 3) == LabelClass::Unknown);
    CHECK(up(2, 2) == LabelClass::Unknown);
    CHECK(up(1, 1) == LabelClass::Background);
    CHECK(resize_nearest(up, 2, 2) == t);
}

TEST_CASE("component count")
{
    BinaryMask m(6, 6, 0);
    CHECK(count_components(m) == 0);
    m(0, 0) = 1;
    m(1, 1) = 1; // diagonal neighbour, same component
    m(4, 4) = 1;
    CHECK(count_components(m) == 2);
}
