#include "clicktrimap/png_io.hpp"
#include "clicktrimap/service.hpp"
#include "clicktrimap/simulation.hpp"
#include "clicktrimap/synthetic.hpp"
#include "clicktrimap/util.hpp"

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <thread>

using namespace clicktrimap;

namespace {

ServiceConfig small_config()
{
    ServiceConfig cfg;
    cfg.resolution = 32;
    return cfg;
}

SessionStore make_store(ServiceConfig cfg = small_config())
{
    return SessionStore(cfg, make_service_predictor(cfg.predictor));
}

std::vector<std::uint8_t> sample_png(int index)
{
    return image_to_png(generate_sample(0, index, 48).image);
}

// Independent recomputation of a session's state from its click list.
Trimap fresh_trimap(const std::vector<std::uint8_t>& png, const std::vector<Click>& clicks,
                    const ServiceConfig& cfg)
{
    const PreparedImage img = prepare_image(image_from_png(png), cfg.resolution);
    return predict_trimap(GeodesicPredictor(), img, clicks, std::nullopt, cfg.sim.click_radius);
}

} // namespace

TEST_CASE("session state equals a fresh replay after add and undo")
{
    SessionStore store = make_store();
    const auto png = sample_png(0);
    const std::string id = store.create_session(png);
    CHECK(id.size() == 32);
    CHECK(store.get_state(id).trimap == Trimap(48, 48, LabelClass::Background));

    std::vector<Click> clicks;
    const std::vector<std::tuple<int, int, LabelClass>> plan{
        {24, 24, LabelClass::Foreground}, {2, 2, LabelClass::Background}, {30, 20, LabelClass::Unknown}};
    for (const auto& [x, y, label] : plan) {
        const SessionSnapshot snap = store.add_click(id, x, y, label);
        clicks.push_back(Click{x, y, label, static_cast<int>(clicks.size())});
        CHECK(snap.clicks == clicks);
        CHECK(snap.trimap == fresh_trimap(png, clicks, store.config()));
    }
    const SessionSnapshot undone = store.undo_click(id);
    clicks.pop_back();
    CHECK(undone.trimap == fresh_trimap(png, clicks, store.config()));
    CHECK(store.reset(id).clicks.empty());
    CHECK(store.undo_click(id).clicks.empty());
}

TEST_CASE("session errors")
{
    SessionStore store = make_store();
    const std::vector<std::uint8_t> junk{1, 2, 3};
    try {
        store.create_session(junk);
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 400);
        CHECK(e.code() == "undecodable");
    }
    const std::string id = store.create_session(sample_png(1));
    try {
        store.add_click(id, 48, 0, LabelClass::Foreground);
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 400);
        CHECK(std::string(e.what()).find("(48,0)") != std::string::npos);
    }
    try {
        store.get_state("deadbeef");
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 404);
    }
    try {
        store.suggest_next(id);
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 409);
    }
    ServiceConfig tiny = small_config();
    tiny.max_megapixels = 0.001;
    SessionStore limited = make_store(tiny);
    try {
        limited.create_session(sample_png(2));
        FAIL("expected rejection");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 413);
    }
}

TEST_CASE("suggestion follows the simulator and ends at convergence")
{
    SessionStore store = make_store();
    const SyntheticSample s = generate_sample(0, 3, 48);
    const std::string id =
        store.create_session(image_to_png(s.image), alpha_to_png(s.gt_alpha), std::nullopt);
    const SessionSnapshot snap = store.get_state(id);
    CHECK(snap.has_ground_truth);
    REQUIRE(snap.metrics.has_value());
    const auto suggestion = store.suggest_next(id);
    REQUIRE(suggestion.has_value());
    const auto expected = simulate_step(snap.trimap, trimap_from_alpha(alpha_from_png(alpha_to_png(s.gt_alpha))),
                                        SimulationConfig{}, Policy::Cups, 0);
    CHECK(*suggestion == *expected.decision.next);
}

TEST_CASE("sessions are isolated")
{
    SessionStore store = make_store();
    const std::string a = store.create_session(sample_png(4));
    const std::string b = store.create_session(sample_png(5));
    CHECK(a != b);
    store.add_click(a, 10, 10, LabelClass::Foreground);
    CHECK(store.get_state(b).clicks.empty());
    CHECK(store.session_count() == 2);
}

TEST_CASE("idle sessions expire")
{
    ServiceConfig cfg = small_config();
    cfg.session_ttl = std::chrono::seconds(10);
    SessionStore store = make_store(cfg);
    const std::string id = store.create_session(sample_png(6));
    CHECK(store.evict_idle(std::chrono::system_clock::now()) == 0);
    CHECK(store.evict_idle(std::chrono::system_clock::now() + std::chrono::seconds(11)) == 1);
    CHECK_THROWS_AS(store.get_state(id), ServiceError);
}

TEST_CASE("sessions survive a restart when persisted")
{
    const auto dir = std::filesystem::temp_directory_path() / "clicktrimap_persist_test";
    std::filesystem::remove_all(dir);
    ServiceConfig cfg = small_config();
    cfg.persist_dir = dir;
    std::string id;
    SessionSnapshot before;
    {
        SessionStore store = make_store(cfg);
        id = store.create_session(sample_png(7));
        store.add_click(id, 20, 20, LabelClass::Foreground);
        before = store.add_click(id, 1, 1, LabelClass::Background);
    }
    SessionStore reopened = make_store(cfg);
    CHECK(reopened.get_state(id) == before);
    std::filesystem::remove_all(dir);
}

TEST_CASE("http interface")
{
    SessionStore store = make_store();
    httplib::Server server;
    register_routes(server, store);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    const auto png = sample_png(8);
    auto created = client.Post("/sessions", std::string(png.begin(), png.end()), "image/png");
    REQUIRE(created);
    REQUIRE(created->status == 200);
    const auto state = nlohmann::json::parse(created->body);
    const std::string id = state.at("id");
    CHECK(state.at("width") == 48);
    CHECK(state.at("clicks").empty());

    auto clicked = client.Post("/sessions/" + id + "/clicks", R"({"x": 24, "y": 24, "label": "F"})",
                               "application/json");
    REQUIRE(clicked);
    CHECK(clicked->status == 200);
    const auto after = nlohmann::json::parse(clicked->body);
    CHECK(after.at("clicks").size() == 1);
    const auto trimap_png = base64_decode(after.at("trimap_png").get<std::string>());
    CHECK(trimap_from_png(trimap_png) == store.get_state(id).trimap);
    CHECK(trimap_from_rle(after.at("trimap_rle")) == store.get_state(id).trimap);

    auto raw = client.Get("/sessions/" + id + "/trimap.png");
    REQUIRE(raw);
    CHECK(raw->get_header_value("Content-Type") == "image/png");
    CHECK(std::vector<std::uint8_t>(raw->body.begin(), raw->body.end()) == trimap_png);

    auto oob = client.Post("/sessions/" + id + "/clicks", R"({"x": 99, "y": 0, "label": "B"})",
                           "application/json");
    REQUIRE(oob);
    CHECK(oob->status == 400);
    CHECK(nlohmann::json::parse(oob->body).at("code") == "out_of_bounds");

    auto bad_label = client.Post("/sessions/" + id + "/clicks", R"({"x": 1, "y": 0, "label": "Q"})",
                                 "application/json");
    REQUIRE(bad_label);
    CHECK(bad_label->status == 400);

    auto undone = client.Post("/sessions/" + id + "/undo", "", "application/json");
    REQUIRE(undone);
    CHECK(nlohmann::json::parse(undone->body).at("clicks").empty());

    auto missing = client.Get("/sessions/0123abcd");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto junk = client.Post("/sessions", "garbage", "image/png");
    REQUIRE(junk);
    CHECK(junk->status == 400);
    CHECK(nlohmann::json::parse(junk->body).at("code") == "undecodable");

    auto no_gt = client.Get("/sessions/" + id + "/suggest");
    REQUIRE(no_gt);
    CHECK(no_gt->status == 409);

    const SyntheticSample s = generate_sample(0, 9, 48);
    const nlohmann::json body = {{"image", base64_encode(image_to_png(s.image))},
                                 {"gt_alpha", base64_encode(alpha_to_png(s.gt_alpha))}};
    auto with_gt = client.Post("/sessions", body.dump(), "application/json");
    REQUIRE(with_gt);
    REQUIRE(with_gt->status == 200);
    const auto gt_state = nlohmann::json::parse(with_gt->body);
    CHECK(gt_state.at("has_ground_truth") == true);
    CHECK(gt_state.at("metrics").contains("mse"));
    auto suggest = client.Get("/sessions/" + gt_state.at("id").get<std::string>() + "/suggest");
    REQUIRE(suggest);
    CHECK(suggest->status == 200);
    CHECK(nlohmann::json::parse(suggest->body).at("converged") == false);

    server.stop();
    worker.join();
}

TEST_CASE("busy port is reported")
{
    httplib::Server blocker;
    const int port = blocker.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    ServiceConfig cfg = small_config();
    cfg.port = port;
    CHECK_THROWS_WITH_AS(run_server(cfg), doctest::Contains("cannot bind"), std::runtime_error);
}
