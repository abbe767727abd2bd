#include "clicktrimap/corpus.hpp"

#include "clicktrimap/png_io.hpp"
#include "clicktrimap/util.hpp"

#include <json.hpp>

namespace clicktrimap {

namespace fs = std::filesystem;

CorpusInfo save_corpus(const std::vector<SyntheticSample>& samples, const fs::path& dir,
                       std::uint64_t seed, int size)
{
    std::error_code ec;
    for (const char* sub : {"images", "alpha", "trimap"}) {
        fs::create_directories(dir / sub, ec);
        if (ec) {
            throw std::runtime_error("cannot create " + (dir / sub).string() + ": " + ec.message());
        }
    }
    std::vector<std::uint8_t> all;
    nlohmann::json entries = nlohmann::json::array();
    for (const SyntheticSample& s : samples) {
        const auto image = image_to_png(s.image);
        const auto alpha = alpha_to_png(s.gt_alpha);
        const auto trimap = trimap_to_png(s.gt_trimap);
        write_file(dir / "images" / (s.id + ".png"), image);
        write_file(dir / "alpha" / (s.id + ".png"), alpha);
        write_file(dir / "trimap" / (s.id + ".png"), trimap);
        all.insert(all.end(), image.begin(), image.end());
        all.insert(all.end(), alpha.begin(), alpha.end());
        all.insert(all.end(), trimap.begin(), trimap.end());
        entries.push_back({{"id", s.id},
                           {"image", "images/" + s.id + ".png"},
                           {"alpha", "alpha/" + s.id + ".png"},
                           {"trimap", "trimap/" + s.id + ".png"}});
    }
    CorpusInfo info{sha256_hex(all), samples.size()};
    const nlohmann::json manifest = {{"seed", seed},
                                     {"size", size},
                                     {"count", samples.size()},
                                     {"hash", info.hash},
                                     {"samples", entries}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return info;
}

std::vector<SyntheticSample> load_corpus(const fs::path& dir, CorpusInfo* info)
{
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        throw InvalidInput("corpus missing: no manifest.json in " + dir.string());
    }
    const auto text = read_file(manifest_path);
    const auto manifest = nlohmann::json::parse(text.begin(), text.end());
    std::vector<SyntheticSample> out;
    std::vector<std::uint8_t> all;
    for (const auto& e : manifest.at("samples")) {
        SyntheticSample s;
        s.id = e.at("id").get<std::string>();
        const auto image = read_file(dir / e.at("image").get<std::string>());
        const auto alpha = read_file(dir / e.at("alpha").get<std::string>());
        const auto trimap = read_file(dir / e.at("trimap").get<std::string>());
        s.image = image_from_png(image);
        s.gt_alpha = alpha_from_png(alpha);
        s.gt_trimap = trimap_from_png(trimap);
        all.insert(all.end(), image.begin(), image.end());
        all.insert(all.end(), alpha.begin(), alpha.end());
        all.insert(all.end(), trimap.begin(), trimap.end());
        out.push_back(std::move(s));
    }
    if (info != nullptr) {
        *info = CorpusInfo{sha256_hex(all), out.size()};
    }
    return out;
}

} // namespace clicktrimap
