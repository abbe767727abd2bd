#pragma once

#include "clicktrimap/core_types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace clicktrimap {

/// One ground-truth example: an image with its alpha matte and trimap.
struct SyntheticSample
{
    std::string id;
    Image image;
    AlphaMatte gt_alpha;
    Trimap gt_trimap;
};

/// F = {a = 1}, B = {a = 0}, and the fractional band (0 < a < 1) dilated by `unknown_dilation`
/// pixels becomes U.
Trimap trimap_from_alpha(const AlphaMatte& alpha, int unknown_dilation = 2);

/// Checks the sample invariants: U covers every fractional alpha, F has a = 1, B has a = 0.
bool satisfies_sample_invariants(const SyntheticSample& s);

SyntheticSample generate_sample(std::uint64_t seed, int index, int size);

/// `n` samples of size x size; sample i depends only on (seed, i).
std::vector<SyntheticSample> generate_synthetic(std::uint64_t seed, int n, int size);

} // namespace clicktrimap
