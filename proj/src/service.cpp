#include "clicktrimap/service.hpp"

#include "clicktrimap/png_io.hpp"
#include "clicktrimap/simulation.hpp"
#include "clicktrimap/synthetic.hpp"
#include "clicktrimap/util.hpp"

#include <httplib.h>

#include <iostream>
#include <random>

namespace clicktrimap {

namespace fs = std::filesystem;
using Clock = std::chrono::system_clock;

namespace {

std::string new_session_id()
{
    std::random_device rd;
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 4; ++i) {
        std::uint32_t v = rd();
        for (int k = 0; k < 8; ++k) {
            id.push_back(kHex[v & 0xf]);
            v >>= 4;
        }
    }
    return id;
}

std::int64_t unix_seconds(Clock::time_point t)
{
    return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

ServiceError not_found(const std::string& id)
{
    return ServiceError(404, "not_found", "no session " + id);
}

} // namespace

bool SessionSnapshot::operator==(const SessionSnapshot& o) const
{
    auto metrics_equal = [](const std::optional<MetricReport>& a,
                            const std::optional<MetricReport>& b) {
        if (a.has_value() != b.has_value()) {
            return false;
        }
        return !a || (a->mse == b->mse && a->sad == b->sad && a->mad == b->mad &&
                      a->pixel_err == b->pixel_err);
    };
    return id == o.id && width == o.width && height == o.height && clicks == o.clicks &&
           trimap == o.trimap && alpha == o.alpha && has_ground_truth == o.has_ground_truth &&
           metrics_equal(metrics, o.metrics);
}

std::shared_ptr<const Predictor> make_service_predictor(const std::string& spec)
{
    if (spec == "geodesic") {
        return std::make_shared<const GeodesicPredictor>();
    }
    if (spec.rfind("mlp:", 0) == 0) {
        return std::make_shared<const MlpPredictor>(load_params(spec.substr(4)));
    }
    throw InvalidInput("unsupported service predictor '" + spec + "' (expected geodesic or mlp:<checkpoint>)");
}

SessionStore::SessionStore(ServiceConfig cfg, std::shared_ptr<const Predictor> predictor)
    : cfg_(std::move(cfg)), predictor_(std::move(predictor))
{
    cfg_.sim.validate();
    if (cfg_.persist_dir) {
        fs::create_directories(*cfg_.persist_dir);
        load_persisted();
    }
}

std::shared_ptr<SessionStore::Session>
SessionStore::build_session(std::string id, std::vector<std::uint8_t> image_png,
                            std::optional<std::vector<std::uint8_t>> gt_alpha_png,
                            std::optional<std::vector<std::uint8_t>> gt_trimap_png) const
{
    if (image_png.empty()) {
        throw ServiceError(400, "undecodable", "undecodable: empty image body");
    }
    Image native;
    try {
        const DecodedPng header = decode_png(image_png);
        if (static_cast<double>(header.width) * header.height > cfg_.max_megapixels * 1e6) {
            throw ServiceError(413, "too_large",
                               "too large: " + std::to_string(header.width) + "x" +
                                   std::to_string(header.height) + " exceeds " +
                                   format_number(cfg_.max_megapixels) + " megapixels");
        }
        native = image_from_png(image_png);
    } catch (const InvalidInput& e) {
        throw ServiceError(400, "undecodable", e.what());
    }

    auto s = std::make_shared<Session>();
    s->id = std::move(id);
    try {
        if (gt_alpha_png) {
            s->gt_alpha = alpha_from_png(*gt_alpha_png);
            require_same_shape(native, *s->gt_alpha, "ground-truth alpha");
        }
        if (gt_trimap_png) {
            s->gt_trimap = trimap_from_png(*gt_trimap_png);
            require_same_shape(native, *s->gt_trimap, "ground-truth trimap");
        } else if (s->gt_alpha) {
            s->gt_trimap = trimap_from_alpha(*s->gt_alpha);
        }
    } catch (const InvalidInput& e) {
        throw ServiceError(400, "bad_ground_truth", e.what());
    }
    s->image = prepare_image(std::move(native), cfg_.resolution);
    s->image_png = std::move(image_png);
    s->gt_alpha_png = std::move(gt_alpha_png);
    s->gt_trimap_png = std::move(gt_trimap_png);
    s->created = s->updated = Clock::now();
    recompute(*s);
    return s;
}

std::string SessionStore::create_session(std::span<const std::uint8_t> image_png,
                                         std::optional<std::vector<std::uint8_t>> gt_alpha_png,
                                         std::optional<std::vector<std::uint8_t>> gt_trimap_png)
{
    evict_idle(Clock::now());
    auto s = build_session(new_session_id(),
                           std::vector<std::uint8_t>(image_png.begin(), image_png.end()),
                           std::move(gt_alpha_png), std::move(gt_trimap_png));
    persist(*s);
    std::unique_lock lock(map_mutex_);
    const std::string id = s->id;
    sessions_.emplace(id, std::move(s));
    return id;
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const
{
    std::shared_lock lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw not_found(id);
    }
    return it->second;
}

void SessionStore::recompute(Session& s) const
{
    s.trimap = replay_prediction(*predictor_, s.image, s.clicks, cfg_.sim.click_radius);
    s.alpha = estimate_alpha(s.image.native, s.trimap);
}

SessionSnapshot SessionStore::snapshot(const Session& s) const
{
    SessionSnapshot snap;
    snap.id = s.id;
    snap.width = s.image.native.width();
    snap.height = s.image.native.height();
    snap.clicks = s.clicks;
    snap.trimap = s.trimap;
    snap.alpha = s.alpha;
    snap.has_ground_truth = s.gt_alpha.has_value() || s.gt_trimap.has_value();
    if (s.gt_alpha) {
        snap.metrics = compute_metrics(s.alpha, *s.gt_alpha, &s.trimap,
                                       s.gt_trimap ? &*s.gt_trimap : nullptr);
    }
    snap.created = unix_seconds(s.created);
    snap.updated = unix_seconds(s.updated);
    return snap;
}

SessionSnapshot SessionStore::add_click(const std::string& id, int x, int y, LabelClass label)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (!s->image.native.contains(x, y)) {
        throw ServiceError(400, "out_of_bounds",
                           "click (" + std::to_string(x) + "," + std::to_string(y) + ") outside " +
                               std::to_string(s->image.native.width()) + "x" +
                               std::to_string(s->image.native.height()) + " image");
    }
    s->clicks.push_back(Click{x, y, label, static_cast<int>(s->clicks.size())});
    recompute(*s);
    s->updated = Clock::now();
    persist(*s);
    return snapshot(*s);
}

SessionSnapshot SessionStore::undo_click(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (!s->clicks.empty()) {
        s->clicks.pop_back();
        recompute(*s);
        s->updated = Clock::now();
        persist(*s);
    }
    return snapshot(*s);
}

SessionSnapshot SessionStore::reset(const std::string& id)
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    s->clicks.clear();
    recompute(*s);
    s->updated = Clock::now();
    persist(*s);
    return snapshot(*s);
}

SessionSnapshot SessionStore::get_state(const std::string& id) const
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return snapshot(*s);
}

std::optional<Click> SessionStore::suggest_next(const std::string& id) const
{
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    if (!s->gt_trimap) {
        throw ServiceError(409, "no_ground_truth", "no ground truth attached to session " + id);
    }
    try {
        const StepOutcome step = simulate_step(s->trimap, *s->gt_trimap, cfg_.sim, Policy::Cups,
                                               static_cast<int>(s->clicks.size()));
        return step.decision.next;
    } catch (const InvalidInput& e) {
        throw ServiceError(409, "empty_target", e.what());
    }
}

std::size_t SessionStore::session_count() const
{
    std::shared_lock lock(map_mutex_);
    return sessions_.size();
}

std::size_t SessionStore::evict_idle(Clock::time_point now)
{
    std::vector<std::string> expired;
    {
        std::shared_lock lock(map_mutex_);
        for (const auto& [id, s] : sessions_) {
            std::lock_guard session_lock(s->mutex);
            if (now - s->updated > cfg_.session_ttl) {
                expired.push_back(id);
            }
        }
    }
    if (expired.empty()) {
        return 0;
    }
    std::unique_lock lock(map_mutex_);
    for (const auto& id : expired) {
        sessions_.erase(id);
        if (cfg_.persist_dir) {
            std::error_code ec;
            fs::remove_all(*cfg_.persist_dir / id, ec);
        }
    }
    return expired.size();
}

void SessionStore::persist(const Session& s) const
{
    if (!cfg_.persist_dir) {
        return;
    }
    const fs::path dir = *cfg_.persist_dir / s.id;
    fs::create_directories(dir);
    if (!fs::exists(dir / "image.png")) {
        write_file(dir / "image.png", s.image_png);
        if (s.gt_alpha_png) {
            write_file(dir / "gt_alpha.png", *s.gt_alpha_png);
        }
        if (s.gt_trimap_png) {
            write_file(dir / "gt_trimap.png", *s.gt_trimap_png);
        }
    }
    nlohmann::json clicks = nlohmann::json::array();
    for (const Click& c : s.clicks) {
        clicks.push_back(click_to_json(c));
    }
    const nlohmann::json manifest = {{"id", s.id},
                                     {"clicks", clicks},
                                     {"created", unix_seconds(s.created)},
                                     {"updated", unix_seconds(s.updated)}};
    const fs::path tmp = dir / "session.json.tmp";
    write_text(tmp, manifest.dump(2));
    fs::rename(tmp, dir / "session.json");
}

void SessionStore::load_persisted()
{
    for (const auto& entry : fs::directory_iterator(*cfg_.persist_dir)) {
        const fs::path manifest_path = entry.path() / "session.json";
        if (!entry.is_directory() || !fs::exists(manifest_path)) {
            continue;
        }
        try {
            const auto text = read_file(manifest_path);
            const auto m = nlohmann::json::parse(text.begin(), text.end());
            std::optional<std::vector<std::uint8_t>> gt_alpha;
            std::optional<std::vector<std::uint8_t>> gt_trimap;
            if (fs::exists(entry.path() / "gt_alpha.png")) {
                gt_alpha = read_file(entry.path() / "gt_alpha.png");
            }
            if (fs::exists(entry.path() / "gt_trimap.png")) {
                gt_trimap = read_file(entry.path() / "gt_trimap.png");
            }
            auto s = build_session(m.at("id").get<std::string>(),
                                   read_file(entry.path() / "image.png"), std::move(gt_alpha),
                                   std::move(gt_trimap));
            for (const auto& c : m.at("clicks")) {
                s->clicks.push_back(Click{c.at("x").get<int>(), c.at("y").get<int>(),
                                          label_from_letter(c.at("label").get<std::string>()),
                                          static_cast<int>(s->clicks.size())});
            }
            recompute(*s);
            s->created = Clock::time_point(std::chrono::seconds(m.at("created").get<std::int64_t>()));
            s->updated = Clock::time_point(std::chrono::seconds(m.at("updated").get<std::int64_t>()));
            const std::string id = s->id;
            sessions_.emplace(id, std::move(s));
        } catch (const std::exception& e) {
            std::cerr << "service: cannot restore " << entry.path() << ": " << e.what() << "\n";
        }
    }
}

// ---------------------------------------------------------------------------------------------

nlohmann::json click_to_json(const Click& c)
{
    return {{"x", c.x}, {"y", c.y}, {"label", std::string(1, to_letter(c.label))}, {"ordinal", c.ordinal}};
}

nlohmann::json metrics_to_json(const MetricReport& m)
{
    nlohmann::json j = {{"mse", m.mse}, {"sad", m.sad}, {"mad", m.mad}};
    j["pixel_err"] = m.pixel_err ? nlohmann::json(*m.pixel_err) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json snapshot_to_json(const SessionSnapshot& s)
{
    nlohmann::json clicks = nlohmann::json::array();
    for (const Click& c : s.clicks) {
        clicks.push_back(click_to_json(c));
    }
    return {{"id", s.id},
            {"width", s.width},
            {"height", s.height},
            {"clicks", clicks},
            {"has_ground_truth", s.has_ground_truth},
            {"metrics", s.metrics ? metrics_to_json(*s.metrics) : nlohmann::json(nullptr)},
            {"trimap_png", base64_encode(trimap_to_png(s.trimap))},
            {"alpha_png", base64_encode(alpha_to_png(s.alpha))},
            {"trimap_rle", trimap_to_rle(s.trimap)},
            {"created", s.created},
            {"updated", s.updated}};
}

nlohmann::json error_json(const std::string& code, const std::string& message)
{
    return {{"code", code}, {"message", message}};
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn)
{
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ServiceError& e) {
            send_json(res, e.status(), error_json(e.code(), e.what()));
        } catch (const nlohmann::json::exception& e) {
            send_json(res, 400, error_json("bad_request", e.what()));
        } catch (const InvalidInput& e) {
            send_json(res, 400, error_json("invalid_input", e.what()));
        } catch (const std::exception& e) {
            send_json(res, 500, error_json("internal", e.what()));
        }
    };
}

std::vector<std::uint8_t> bytes_of(const std::string& s)
{
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::optional<std::vector<std::uint8_t>> optional_base64(const nlohmann::json& body, const char* key)
{
    if (!body.contains(key) || body.at(key).is_null()) {
        return std::nullopt;
    }
    try {
        return base64_decode(body.at(key).get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ServiceError(400, "undecodable", std::string("undecodable: ") + key + ": " + e.what());
    }
}

} // namespace

void register_routes(httplib::Server& server, SessionStore& store)
{
    server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, {{"status", "ok"}});
               }));

    // Body: raw PNG (Content-Type image/png) or JSON {image, gt_alpha?, gt_trimap?} in base64.
    server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    std::string id;
                    const std::string type = req.get_header_value("Content-Type");
                    if (req.body.empty()) {
                        throw ServiceError(400, "undecodable", "undecodable: empty body");
                    }
                    if (type.rfind("application/json", 0) == 0) {
                        const auto body = nlohmann::json::parse(req.body);
                        auto image = optional_base64(body, "image");
                        if (!image) {
                            throw ServiceError(400, "undecodable", "undecodable: missing image");
                        }
                        id = store.create_session(*image, optional_base64(body, "gt_alpha"),
                                                  optional_base64(body, "gt_trimap"));
                    } else {
                        id = store.create_session(bytes_of(req.body));
                    }
                    const SessionSnapshot snap = store.get_state(id);
                    send_json(res, 200, snapshot_to_json(snap));
                }));

    server.Post(R"(/sessions/([0-9a-f]+)/clicks)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const auto body = nlohmann::json::parse(req.body);
                    const LabelClass label = label_from_letter(body.at("label").get<std::string>());
                    send_json(res, 200,
                              snapshot_to_json(store.add_click(req.matches[1], body.at("x").get<int>(),
                                                               body.at("y").get<int>(), label)));
                }));

    server.Post(R"(/sessions/([0-9a-f]+)/undo)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, 200, snapshot_to_json(store.undo_click(req.matches[1])));
                }));

    server.Post(R"(/sessions/([0-9a-f]+)/reset)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, 200, snapshot_to_json(store.reset(req.matches[1])));
                }));

    server.Get(R"(/sessions/([0-9a-f]+))",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, snapshot_to_json(store.get_state(req.matches[1])));
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/suggest)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto next = store.suggest_next(req.matches[1]);
                   nlohmann::json body = {{"converged", !next.has_value()}};
                   body["click"] = next ? click_to_json(*next) : nlohmann::json(nullptr);
                   send_json(res, 200, body);
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/alpha\.png)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto png = alpha_to_png(store.get_state(req.matches[1]).alpha);
                   res.set_content(std::string(png.begin(), png.end()), "image/png");
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/trimap\.png)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   const auto png = trimap_to_png(store.get_state(req.matches[1]).trimap);
                   res.set_content(std::string(png.begin(), png.end()), "image/png");
               }));
}

void run_server(const ServiceConfig& cfg)
{
    SessionStore store(cfg, make_service_predictor(cfg.predictor));
    httplib::Server server;
    register_routes(server, store);
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (!server.bind_to_port(cfg.host, cfg.port)) {
        throw std::runtime_error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port) +
                                 " (address in use or not permitted)");
    }
    std::cerr << "serving on http://" << cfg.host << ":" << cfg.port << "\n";
    if (!server.listen_after_bind()) {
        throw std::runtime_error("server stopped unexpectedly");
    }
}

} // namespace clicktrimap
