#pragma once

#include "clicktrimap/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace clicktrimap {

struct CorpusInfo
{
    std::string hash; // sha256 over every sample's PNG bytes in manifest order
    std::size_t count = 0;
};

/// Writes images/<id>.png, alpha/<id>.png, trimap/<id>.png and manifest.json under `dir`.
CorpusInfo save_corpus(const std::vector<SyntheticSample>& samples, const std::filesystem::path& dir,
                       std::uint64_t seed, int size);

/// Loads a corpus written by save_corpus. Image values are 8-bit quantized.
std::vector<SyntheticSample> load_corpus(const std::filesystem::path& dir, CorpusInfo* info = nullptr);

} // namespace clicktrimap
