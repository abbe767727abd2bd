#pragma once

#include "clicktrimap/core_types.hpp"
#include "clicktrimap/matting.hpp"
#include "clicktrimap/predictors.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace httplib {
class Server;
}

namespace clicktrimap {

struct ServiceConfig
{
    std::string host = "127.0.0.1";
    int port = 8080;
    int resolution = 448;
    std::string predictor = "geodesic"; // or mlp:<checkpoint>
    std::chrono::seconds session_ttl{3600};
    double max_megapixels = 16.0;
    std::optional<std::filesystem::path> persist_dir;
    SimulationConfig sim;
};

/// Request failure carrying the HTTP status and a stable error code.
class ServiceError : public std::runtime_error
{
  public:
    ServiceError(int status, std::string code, const std::string& message)
        : std::runtime_error(message), status_(status), code_(std::move(code))
    {
    }
    int status() const { return status_; }
    const std::string& code() const { return code_; }

  private:
    int status_;
    std::string code_;
};

struct SessionSnapshot
{
    std::string id;
    int width = 0;
    int height = 0;
    std::vector<Click> clicks;
    Trimap trimap;
    AlphaMatte alpha;
    bool has_ground_truth = false;
    std::optional<MetricReport> metrics;
    std::int64_t created = 0; // unix seconds
    std::int64_t updated = 0;

    bool operator==(const SessionSnapshot&) const;
};

std::shared_ptr<const Predictor> make_service_predictor(const std::string& spec);

class SessionStore
{
  public:
    SessionStore(ServiceConfig cfg, std::shared_ptr<const Predictor> predictor);

    std::string create_session(std::span<const std::uint8_t> image_png,
                               std::optional<std::vector<std::uint8_t>> gt_alpha_png = std::nullopt,
                               std::optional<std::vector<std::uint8_t>> gt_trimap_png = std::nullopt);
    SessionSnapshot add_click(const std::string& id, int x, int y, LabelClass label);
    SessionSnapshot undo_click(const std::string& id);
    SessionSnapshot reset(const std::string& id);
    SessionSnapshot get_state(const std::string& id) const;
    /// The click the CUPS simulator would make next; nullopt once the prediction matches gt.
    std::optional<Click> suggest_next(const std::string& id) const;

    std::size_t session_count() const;
    /// Drops sessions idle for longer than the configured TTL; returns how many were removed.
    std::size_t evict_idle(std::chrono::system_clock::time_point now);

    const ServiceConfig& config() const { return cfg_; }

  private:
    struct Session
    {
        std::string id;
        PreparedImage image;
        std::vector<Click> clicks;
        Trimap trimap;
        AlphaMatte alpha;
        std::optional<AlphaMatte> gt_alpha;
        std::optional<Trimap> gt_trimap;
        std::vector<std::uint8_t> image_png;
        std::optional<std::vector<std::uint8_t>> gt_alpha_png;
        std::optional<std::vector<std::uint8_t>> gt_trimap_png;
        std::chrono::system_clock::time_point created;
        std::chrono::system_clock::time_point updated;
        mutable std::mutex mutex;
    };

    std::shared_ptr<Session> find(const std::string& id) const;
    void recompute(Session& s) const;
    SessionSnapshot snapshot(const Session& s) const;
    void persist(const Session& s) const;
    void load_persisted();
    std::shared_ptr<Session> build_session(std::string id, std::vector<std::uint8_t> image_png,
                                           std::optional<std::vector<std::uint8_t>> gt_alpha_png,
                                           std::optional<std::vector<std::uint8_t>> gt_trimap_png) const;

    ServiceConfig cfg_;
    std::shared_ptr<const Predictor> predictor_;
    mutable std::shared_mutex map_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
};

nlohmann::json click_to_json(const Click& c);
nlohmann::json metrics_to_json(const MetricReport& m);
/// Session state as sent to the UI: metadata, clicks, metrics, base64 PNG rasters and the
/// run-length trimap overlay.
nlohmann::json snapshot_to_json(const SessionSnapshot& s);
nlohmann::json error_json(const std::string& code, const std::string& message);

/// Installs the HTTP+JSON routes for `store` on `server`.
void register_routes(httplib::Server& server, SessionStore& store);

/// Binds and serves until the process is stopped. Throws if the address cannot be bound.
void run_server(const ServiceConfig& cfg);

} // namespace clicktrimap
