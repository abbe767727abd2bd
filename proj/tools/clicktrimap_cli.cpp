#include "clicktrimap/corpus.hpp"
#include "clicktrimap/harness.hpp"
#include "clicktrimap/matting.hpp"
#include "clicktrimap/png_io.hpp"
#include "clicktrimap/predictors.hpp"
#include "clicktrimap/service.hpp"
#include "clicktrimap/synthetic.hpp"
#include "clicktrimap/training.hpp"
#include "clicktrimap/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace clicktrimap;

namespace {

struct CommonFlags
{
    std::uint64_t seed = 0;
    std::string policy = "cups";
    std::string predictor = "geodesic";
    int resolution = 448;
    unsigned threads = 0;
    SimulationConfig sim;
};

void add_sim_flags(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--alpha", f.sim.alpha_threshold, "Error-level threshold for unknown priority")
        ->envname("CLICKTRIMAP_ALPHA");
    cmd->add_option("--beta", f.sim.beta_threshold, "Unknown error size (pixels) that keeps priority")
        ->envname("CLICKTRIMAP_BETA");
    cmd->add_option("--gamma", f.sim.gamma, "Focal exponent")->envname("CLICKTRIMAP_GAMMA");
    cmd->add_option("--max-clicks", f.sim.max_clicks, "Click budget per image")
        ->envname("CLICKTRIMAP_MAX_CLICKS");
    cmd->add_option("--click-radius", f.sim.click_radius, "Click disk radius at working resolution")
        ->envname("CLICKTRIMAP_CLICK_RADIUS");
}

void add_common_flags(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--seed", f.seed, "Random seed")->envname("CLICKTRIMAP_SEED");
    cmd->add_option("--policy", f.policy, "Click policy: twoclass, itts or cups")
        ->envname("CLICKTRIMAP_POLICY")
        ->check(CLI::IsMember({"twoclass", "itts", "cups"}));
    cmd->add_option("--predictor", f.predictor, "geodesic, mlp:<checkpoint> or oracle")
        ->envname("CLICKTRIMAP_PREDICTOR");
    cmd->add_option("--resolution", f.resolution, "Working resolution (0 = native)")
        ->envname("CLICKTRIMAP_RESOLUTION");
    cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)")
        ->envname("CLICKTRIMAP_THREADS");
    add_sim_flags(cmd, f);
}

PredictorFactory factory_for(const std::string& spec)
{
    if (spec == "oracle") {
        return [](const SyntheticSample& s) {
            return std::make_shared<const OraclePredictor>(s.gt_trimap);
        };
    }
    auto predictor = make_service_predictor(spec);
    return [predictor](const SyntheticSample&) { return predictor; };
}

std::vector<Click> read_clicks(const fs::path& path)
{
    const auto text = read_file(path);
    const auto j = nlohmann::json::parse(text.begin(), text.end());
    if (!j.is_array()) {
        throw InvalidInput("clicks file must hold a JSON array of {x, y, label}");
    }
    std::vector<Click> clicks;
    for (const auto& c : j) {
        clicks.push_back(Click{c.at("x").get<int>(), c.at("y").get<int>(),
                               label_from_letter(c.at("label").get<std::string>()),
                               static_cast<int>(clicks.size())});
    }
    return clicks;
}

nlohmann::json run_manifest(const CommonFlags& f, const CorpusInfo& corpus)
{
    return {{"seed", f.seed}, {"corpus_hash", corpus.hash}, {"resolution", f.resolution}};
}

EvalOptions eval_options(const CommonFlags& f, const fs::path& corpus)
{
    EvalOptions o;
    o.resolution = f.resolution;
    o.threads = f.threads;
    o.seed = f.seed;
    o.dataset_id = corpus.filename().string();
    o.predictor_id = f.predictor;
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Click-driven trimap prediction: simulation, training, evaluation and serving"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic matting corpus");
    std::uint64_t gen_seed = 0;
    int gen_n = 200;
    int gen_size = 64;
    fs::path gen_out;
    gen->add_option("--seed", gen_seed)->envname("CLICKTRIMAP_SEED");
    gen->add_option("--n", gen_n, "Number of samples")->check(CLI::NonNegativeNumber);
    gen->add_option("--size", gen_size, "Square image size (>= 32)")->check(CLI::Range(32, 8192));
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the perceptron predictor");
    CommonFlags train_flags;
    train_flags.resolution = 0;
    TrainConfig train_cfg;
    fs::path train_corpus, eval_corpus, checkpoint_out, log_out;
    std::uint64_t init_seed = 0;
    add_common_flags(train_cmd, train_flags);
    train_cmd->add_option("--corpus", train_corpus, "Training corpus directory")->required();
    train_cmd->add_option("--eval-corpus", eval_corpus, "Held-out corpus for per-epoch evaluation");
    train_cmd->add_option("--epochs", train_cfg.epochs)->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--batch-size", train_cfg.batch_size)->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", train_cfg.learning_rate);
    train_cmd->add_option("--max-inner", train_cfg.max_inner_iterations)->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--eval-every", train_cfg.eval_every)->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--init-seed", init_seed, "Seed for the initial weights");
    train_cmd->add_option("--out", checkpoint_out, "Checkpoint path")->required();
    train_cmd->add_option("--log", log_out, "Training log CSV path");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Iterative click evaluation");
    CommonFlags eval_flags;
    fs::path eval_corpus_dir, eval_out;
    std::string placement = "center";
    add_common_flags(eval_cmd, eval_flags);
    eval_cmd->add_option("--corpus", eval_corpus_dir)->required();
    eval_cmd->add_option("--out", eval_out, "Run directory")->required();
    eval_cmd->add_option("--placement", placement)->check(CLI::IsMember({"center", "random"}));

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate over alpha or beta threshold values");
    CommonFlags sweep_flags;
    fs::path sweep_corpus, sweep_out;
    std::string sweep_param;
    std::vector<double> sweep_values;
    add_common_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--corpus", sweep_corpus)->required();
    sweep_cmd->add_option("--out", sweep_out)->required();
    sweep_cmd->add_option("--param", sweep_param)->required()->check(CLI::IsMember({"alpha", "beta"}));
    sweep_cmd->add_option("--values", sweep_values)->required()->delimiter(',');

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Predict trimap and alpha for one image");
    CommonFlags predict_flags;
    fs::path predict_image, predict_clicks, predict_out;
    add_common_flags(predict_cmd, predict_flags);
    predict_cmd->add_option("--image", predict_image)->required();
    predict_cmd->add_option("--clicks", predict_clicks, "JSON array of {x, y, label: F|B|U}")->required();
    predict_cmd->add_option("--out", predict_out, "Output directory")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the interactive session service");
    ServiceConfig serve_cfg;
    long ttl_seconds = 3600;
    std::string persist_dir;
    serve_cmd->add_option("--host", serve_cfg.host)->envname("CLICKTRIMAP_HOST");
    serve_cmd->add_option("--port", serve_cfg.port)->envname("CLICKTRIMAP_PORT")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--resolution", serve_cfg.resolution)->envname("CLICKTRIMAP_RESOLUTION");
    serve_cmd->add_option("--predictor", serve_cfg.predictor)->envname("CLICKTRIMAP_PREDICTOR");
    serve_cmd->add_option("--ttl", ttl_seconds, "Idle session lifetime in seconds")
        ->envname("CLICKTRIMAP_TTL");
    serve_cmd->add_option("--max-megapixels", serve_cfg.max_megapixels)
        ->envname("CLICKTRIMAP_MAX_MEGAPIXELS");
    serve_cmd->add_option("--persist-dir", persist_dir)->envname("CLICKTRIMAP_PERSIST_DIR");
    serve_cmd->add_option("--alpha", serve_cfg.sim.alpha_threshold)->envname("CLICKTRIMAP_ALPHA");
    serve_cmd->add_option("--beta", serve_cfg.sim.beta_threshold)->envname("CLICKTRIMAP_BETA");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) {
            const auto samples = generate_synthetic(gen_seed, gen_n, gen_size);
            const CorpusInfo info = save_corpus(samples, gen_out, gen_seed, gen_size);
            std::cout << info.count << " samples, corpus hash " << info.hash << "\n";
        } else if (*train_cmd) {
            train_flags.sim.validate();
            const auto train_set = load_corpus(train_corpus);
            const auto eval_set = eval_corpus.empty() ? std::vector<SyntheticSample>{}
                                                      : load_corpus(eval_corpus);
            train_cfg.rng_seed = train_flags.seed;
            train_cfg.policy = policy_from_string(train_flags.policy);
            train_cfg.resolution = train_flags.resolution;
            train_cfg.threads = train_flags.threads;
            const TrainResult result =
                train(train_set, eval_set, MlpParams::random(init_seed), train_cfg, train_flags.sim,
                      [](const TrainLogRow& r) {
                          std::cerr << "epoch " << r.epoch << " loss " << r.mean_loss << "\n";
                      });
            save_params(result.params, checkpoint_out);
            if (!log_out.empty()) {
                write_text(log_out, training_log_csv(result.log));
            }
        } else if (*eval_cmd) {
            eval_flags.sim.validate();
            CorpusInfo corpus;
            const auto dataset = load_corpus(eval_corpus_dir, &corpus);
            EvalOptions opts = eval_options(eval_flags, eval_corpus_dir);
            opts.placement = placement == "random" ? ClickPlacement::UniformRandom : ClickPlacement::Center;
            const EvalRun run = evaluate(dataset, factory_for(eval_flags.predictor),
                                         policy_from_string(eval_flags.policy), eval_flags.sim, opts);
            write_run_directory(run, eval_out, run_manifest(eval_flags, corpus));
            std::cout << summary_csv(run).substr(summary_csv(run).rfind("mean,"));
        } else if (*sweep_cmd) {
            sweep_flags.sim.validate();
            CorpusInfo corpus;
            const auto dataset = load_corpus(sweep_corpus, &corpus);
            const SweepParameter param =
                sweep_param == "alpha" ? SweepParameter::AlphaThreshold : SweepParameter::BetaThreshold;
            const auto entries = sweep(param, sweep_values, dataset, factory_for(sweep_flags.predictor),
                                       sweep_flags.sim, eval_options(sweep_flags, sweep_corpus),
                                       policy_from_string(sweep_flags.policy));
            fs::create_directories(sweep_out);
            write_text(sweep_out / ("sweep_" + sweep_param + ".csv"), sweep_csv(param, entries));
            for (const SweepEntry& e : entries) {
                nlohmann::json extra = run_manifest(sweep_flags, corpus);
                extra["sweep"] = {{"param", sweep_param}, {"value", e.value}};
                write_run_directory(e.run, sweep_out / (sweep_param + "_" + format_number(e.value)), extra);
            }
            std::cout << sweep_csv(param, entries);
        } else if (*predict_cmd) {
            if (predict_flags.predictor == "oracle") {
                throw InvalidInput("the oracle predictor needs ground truth; use geodesic or mlp:<checkpoint>");
            }
            const Image image = image_from_png(read_file(predict_image));
            const auto clicks = read_clicks(predict_clicks);
            const auto predictor = make_service_predictor(predict_flags.predictor);
            const PreparedImage prepared = prepare_image(image, predict_flags.resolution);
            const Trimap trimap =
                replay_prediction(*predictor, prepared, clicks, predict_flags.sim.click_radius);
            const AlphaMatte alpha = estimate_alpha(image, trimap);
            fs::create_directories(predict_out);
            write_file(predict_out / "trimap.png", trimap_to_png(trimap));
            write_file(predict_out / "alpha.png", alpha_to_png(alpha));
        } else if (*serve_cmd) {
            serve_cfg.session_ttl = std::chrono::seconds(ttl_seconds);
            if (!persist_dir.empty()) {
                serve_cfg.persist_dir = persist_dir;
            }
            run_server(serve_cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
