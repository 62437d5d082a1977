// coopdrive: data generation, training, evaluation, ablations and codec
// benchmarking for cooperative brake/go decision making.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopdrive.hpp"
#include "coopdrive/manifest.hpp"

namespace fs = std::filesystem;
using namespace coopdrive;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << content;
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    for (const json& r : records) f << r.dump() << "\n";
}

json eval_report_record(const EvalReport& r) {
    return json{{"scenario", r.scenario},
                {"mode", r.mode},
                {"instances", r.instances},
                {"brake_fraction", r.brake_fraction},
                {"ad", r.metrics.ad},
                {"ear", r.metrics.ear},
                {"confusion",
                 {{"tp", r.metrics.confusion.tp},
                  {"fn", r.metrics.confusion.fn},
                  {"fp", r.metrics.confusion.fp},
                  {"tn", r.metrics.confusion.tn}}},
                {"packets_sent", r.packets_sent},
                {"ps_mean_bytes", r.ps_mean_bytes},
                {"ps_max_bytes", r.ps_max_bytes}};
}

std::string eval_report_table(const EvalReport& r) {
    std::ostringstream os;
    os << "scenario         " << r.scenario << "\n"
       << "mode             " << r.mode << "\n"
       << "instances        " << r.instances << "\n"
       << "brake fraction   " << r.brake_fraction << "\n"
       << "AD               " << r.metrics.ad << "\n"
       << "EAR              " << r.metrics.ear << "\n"
       << "confusion        tp=" << r.metrics.confusion.tp << " fn=" << r.metrics.confusion.fn
       << " fp=" << r.metrics.confusion.fp << " tn=" << r.metrics.confusion.tn << "\n"
       << "packets sent     " << r.packets_sent << "\n"
       << "PS mean bytes    " << r.ps_mean_bytes << "\n"
       << "PS max bytes     " << r.ps_max_bytes << "\n";
    return os.str();
}

struct DataSelection {
    std::string dir;
    std::string scenario = "street_crossing";
    int offset = 0;
    int trials = 12;
};

std::vector<Episode> load_selection(const DataSelection& sel) {
    return load_trials(sel.dir, scenario_from_string(sel.scenario), sel.offset, sel.trials);
}

int cmd_generate(const std::string& scenario_name, int trials, uint64_t seed_base,
                 const std::string& out_dir, int steps, bool hazard, bool text_export) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioId scenario = scenario_from_string(scenario_name);
    ScenarioConfig cfg;
    cfg.steps = steps;
    cfg.include_hazard = hazard;
    fs::create_directories(out_dir);

    RunManifest manifest("generate");
    manifest.config("scenario", scenario_name);
    manifest.config("trials", trials);
    manifest.config("seed_base", seed_base);
    manifest.config("steps", steps);
    manifest.config("include_hazard", hazard);
    manifest.config("config_hash", cfg.content_hash());

    for (int t = 0; t < trials; ++t) {
        const Episode ep = simulate_episode(scenario, seed_base + static_cast<uint64_t>(t), cfg);
        const auto path = fs::path(out_dir) / episode_filename(scenario, t);
        save_episode(path.string(), ep);
        manifest.output(path.string());
        if (text_export) {
            const auto tpath = fs::path(out_dir) / (path.stem().string() + ".txt");
            write_text(tpath.string(), episode_to_text(ep));
        }
    }
    manifest.timing("total", ms_since(t0));
    manifest.write((fs::path(out_dir) / ("generate_" + scenario_name + ".manifest.json")).string());
    std::cout << "wrote " << trials << " " << scenario_name << " trials to " << out_dir << "\n";
    return kExitOk;
}

int cmd_train(const DataSelection& sel, const std::string& mode_name,
              const std::string& channel_name, double loss_probability, TrainConfig tc,
              const std::string& out_checkpoint) {
    const auto t0 = std::chrono::steady_clock::now();
    AssembleConfig ac;
    ac.mode = ablation_from_string(mode_name);
    ac.channel = ChannelConfig::preset(channel_name, loss_probability);

    const std::vector<Episode> episodes = load_selection(sel);
    const Dataset ds = assemble_dataset(episodes, ac, RngStream(99));
    const double assemble_ms = ms_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const TrainResult result = train(ds, tc);
    const double train_ms = ms_since(t1);

    if (!out_checkpoint.empty()) {
        if (fs::path(out_checkpoint).has_parent_path()) {
            fs::create_directories(fs::path(out_checkpoint).parent_path());
        }
        save_checkpoint(out_checkpoint, result.params);
        std::vector<json> curve;
        for (size_t e = 0; e < result.epoch_loss.size(); ++e) {
            curve.push_back(json{{"epoch", e}, {"train_loss", result.epoch_loss[e]}});
        }
        write_jsonl(out_checkpoint + ".loss.jsonl", curve);

        RunManifest manifest("train");
        manifest.config("scenario", sel.scenario);
        manifest.config("mode", mode_name);
        manifest.config("channel", channel_name);
        manifest.config("trials", sel.trials);
        manifest.config("trials_offset", sel.offset);
        manifest.config("epochs", tc.epochs);
        manifest.config("learning_rate", tc.learning_rate);
        manifest.config("batch_size", tc.batch_size);
        manifest.config("seed", tc.seed);
        manifest.config("class_weights", tc.class_weights);
        manifest.output(out_checkpoint);
        manifest.output(out_checkpoint + ".loss.jsonl");
        manifest.timing("assemble", assemble_ms);
        manifest.timing("train", train_ms);
        manifest.write(out_checkpoint + ".manifest.json");
    }
    std::cout << "train loss " << result.epoch_loss.front() << " -> " << result.epoch_loss.back()
              << " over " << tc.epochs << " epochs (" << ds.instances.size() << " instances)\n";
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const DataSelection& sel, const std::string& mode_name,
             const std::string& channel_name, double loss_probability, const std::string& report) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> params = load_checkpoint(checkpoint);

    AssembleConfig ac;
    ac.mode = ablation_from_string(mode_name);
    ac.channel = ChannelConfig::preset(channel_name, loss_probability);
    const std::vector<Episode> episodes = load_selection(sel);
    const Dataset ds = assemble_dataset(episodes, ac, RngStream(100));

    const EvalReport r = evaluate(ds, params, sel.scenario);
    write_jsonl(report + ".jsonl", {eval_report_record(r)});
    write_text(report + ".txt", eval_report_table(r));

    RunManifest manifest("eval");
    manifest.config("checkpoint", checkpoint);
    manifest.config("scenario", sel.scenario);
    manifest.config("mode", mode_name);
    manifest.config("channel", channel_name);
    manifest.config("trials", sel.trials);
    manifest.config("trials_offset", sel.offset);
    manifest.input(checkpoint);
    manifest.output(report + ".jsonl");
    manifest.output(report + ".txt");
    manifest.timing("total", ms_since(t0));
    manifest.timing("graph_build_ms_mean", r.build_ms_mean);
    manifest.timing("forward_ms_mean", r.forward_ms_mean);
    manifest.write(report + ".manifest.json");

    std::cout << eval_report_table(r);
    std::cout << "graph build mean " << r.build_ms_mean << " ms, forward mean "
              << r.forward_ms_mean << " ms\n";
    return kExitOk;
}

int cmd_ablate(const std::string& dir, const std::string& report, AblationConfig cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<AblationRun> runs = run_ablation_matrix(dir, cfg);

    std::vector<json> records;
    for (const AblationRun& r : runs) {
        records.push_back(json{{"scenario", r.scenario},
                               {"mode", to_string(r.mode)},
                               {"train_seed", r.train_seed},
                               {"ad", r.ad},
                               {"ear", r.ear},
                               {"initial_loss", r.initial_loss},
                               {"final_loss", r.final_loss}});
    }
    write_jsonl(report + ".jsonl", records);
    const std::string table = render_ablation_table(runs);
    write_text(report + ".txt", table);

    RunManifest manifest("ablate");
    manifest.config("data", dir);
    manifest.config("train_trials", cfg.train_trials);
    manifest.config("test_trials", cfg.test_trials);
    manifest.config("epochs", cfg.train.epochs);
    manifest.config("seeds", cfg.train_seeds);
    manifest.output(report + ".jsonl");
    manifest.output(report + ".txt");
    manifest.timing("total", ms_since(t0));
    manifest.write(report + ".manifest.json");

    std::cout << table;
    return kExitOk;
}

int cmd_codec_bench(const std::string& dir, const std::string& channel_name,
                    double loss_probability, const std::string& report, int stride) {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelConfig channel = ChannelConfig::preset(channel_name, loss_probability);
    const ChannelConfig dsrc = ChannelConfig::dsrc();
    const ChannelConfig cv2x = ChannelConfig::cv2x();

    std::vector<json> records;
    std::ostringstream table;
    table << "scenario          packets   PS mean B   PS max B   DSRC fit   C-V2X fit\n";
    for (ScenarioId scenario :
         {ScenarioId::overtaking, ScenarioId::left_turn, ScenarioId::street_crossing}) {
        size_t packets = 0, ps_total = 0, ps_max = 0;
        int trial = 0;
        while (fs::exists(fs::path(dir) / episode_filename(scenario, trial))) {
            const Episode ep =
                load_episode((fs::path(dir) / episode_filename(scenario, trial)).string());
            for (int32_t step = 14; step < ep.steps(); step += stride) {
                for (size_t v = 0; v < ep.connected.size(); ++v) {
                    const ObservationWindow w = build_window(ep, v, step, 15);
                    const std::vector<uint8_t> packet = encode_window(w);
                    packets += 1;
                    ps_total += packet.size();
                    ps_max = std::max(ps_max, packet.size());
                }
            }
            ++trial;
        }
        if (trial == 0) continue;
        const double ps_mean = packets ? static_cast<double>(ps_total) / packets : 0.0;
        const bool dsrc_ok = ps_max <= dsrc.max_package_bytes;
        const bool cv2x_ok = ps_max <= cv2x.max_package_bytes;
        records.push_back(json{{"scenario", to_string(scenario)},
                               {"packets", packets},
                               {"ps_mean_bytes", ps_mean},
                               {"ps_max_bytes", ps_max},
                               {"latency_ms_at_channel", ps_max * 8.0 / channel.bandwidth_bps * 1e3},
                               {"dsrc_feasible", dsrc_ok},
                               {"cv2x_feasible", cv2x_ok}});
        table << std::left << std::setw(18) << to_string(scenario) << std::right << std::setw(7)
              << packets << std::setw(12) << std::fixed << std::setprecision(1) << ps_mean
              << std::setw(11) << ps_max << std::setw(11) << (dsrc_ok ? "yes" : "NO")
              << std::setw(12) << (cv2x_ok ? "yes" : "NO") << "\n";
    }
    if (records.empty()) throw ConfigError("no episode files found under " + dir);

    write_jsonl(report + ".jsonl", records);
    write_text(report + ".txt", table.str());

    RunManifest manifest("codec-bench");
    manifest.config("data", dir);
    manifest.config("channel", channel_name);
    manifest.config("stride", stride);
    manifest.output(report + ".jsonl");
    manifest.output(report + ".txt");
    manifest.timing("total", ms_since(t0));
    manifest.write(report + ".manifest.json");

    std::cout << table.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cooperative spatiotemporal-graph decision making"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags take precedence");

    std::string default_out = ".";
    if (const char* env = std::getenv("COOPDRIVE_OUT")) default_out = env;

    // generate
    auto* gen = app.add_subcommand("generate", "simulate scenario trials");
    std::string gen_scenario = "street_crossing";
    int gen_trials = 24;
    uint64_t gen_seed_base = 0;
    std::string gen_out = default_out;
    int gen_steps = 300;
    bool gen_no_hazard = false, gen_text = false;
    gen->add_option("--scenario", gen_scenario, "overtaking | left_turn | street_crossing")
        ->required();
    gen->add_option("--trials", gen_trials, "number of trials");
    gen->add_option("--seed-base", gen_seed_base, "seed of trial 0");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--steps", gen_steps, "timesteps per trial");
    gen->add_flag("--no-hazard", gen_no_hazard, "disable the hazard vehicle");
    gen->add_flag("--text", gen_text, "also write text exports");

    // train
    auto* tr = app.add_subcommand("train", "imitation-train a model");
    DataSelection tr_sel;
    std::string tr_mode = "full", tr_channel = "DSRC", tr_out;
    double tr_loss_prob = 0.05;
    TrainConfig tr_cfg;
    tr->add_option("--data", tr_sel.dir, "episode directory")->required();
    tr->add_option("--scenario", tr_sel.scenario)->required();
    tr->add_option("--trials", tr_sel.trials, "trials used for training");
    tr->add_option("--trials-offset", tr_sel.offset);
    tr->add_option("--mode", tr_mode, "full | NT-NS | T-NS | NT-S");
    tr->add_option("--channel", tr_channel, "DSRC | C-V2X");
    tr->add_option("--loss-probability", tr_loss_prob);
    tr->add_option("--epochs", tr_cfg.epochs);
    tr->add_option("--lr", tr_cfg.learning_rate);
    tr->add_option("--batch-size", tr_cfg.batch_size);
    tr->add_option("--seed", tr_cfg.seed);
    tr->add_option("--jobs", tr_cfg.jobs);
    bool tr_no_weights = false;
    tr->add_flag("--no-class-weights", tr_no_weights);
    tr->add_option("--out-checkpoint", tr_out, "checkpoint path")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    DataSelection ev_sel;
    ev_sel.offset = 12;
    std::string ev_checkpoint, ev_mode = "full", ev_channel = "DSRC", ev_report = "eval_report";
    double ev_loss_prob = 0.05;
    ev->add_option("--checkpoint", ev_checkpoint)->required();
    ev->add_option("--data", ev_sel.dir)->required();
    ev->add_option("--scenario", ev_sel.scenario)->required();
    ev->add_option("--trials", ev_sel.trials);
    ev->add_option("--trials-offset", ev_sel.offset);
    ev->add_option("--mode", ev_mode);
    ev->add_option("--channel", ev_channel);
    ev->add_option("--loss-probability", ev_loss_prob);
    ev->add_option("--report", ev_report, "report path prefix");

    // ablate
    auto* ab = app.add_subcommand("ablate", "run the 4-mode x 3-scenario matrix");
    std::string ab_dir, ab_report = "ablation_report";
    AblationConfig ab_cfg;
    int ab_seeds = 5;
    ab->add_option("--data", ab_dir)->required();
    ab->add_option("--report", ab_report);
    ab->add_option("--seeds", ab_seeds, "number of training seeds");
    ab->add_option("--epochs", ab_cfg.train.epochs);
    ab->add_option("--train-trials", ab_cfg.train_trials);
    ab->add_option("--test-trials", ab_cfg.test_trials);
    ab->add_option("--jobs", ab_cfg.jobs);

    // codec-bench
    auto* cb = app.add_subcommand("codec-bench", "package-size statistics and channel feasibility");
    std::string cb_dir, cb_channel = "DSRC", cb_report = "codec_report";
    double cb_loss_prob = 0.05;
    int cb_stride = 10;
    cb->add_option("--data", cb_dir)->required();
    cb->add_option("--channel", cb_channel);
    cb->add_option("--loss-probability", cb_loss_prob);
    cb->add_option("--report", cb_report);
    cb->add_option("--stride", cb_stride, "decision-step stride");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            return cmd_generate(gen_scenario, gen_trials, gen_seed_base, gen_out, gen_steps,
                                !gen_no_hazard, gen_text);
        }
        if (tr->parsed()) {
            tr_cfg.class_weights = !tr_no_weights;
            return cmd_train(tr_sel, tr_mode, tr_channel, tr_loss_prob, tr_cfg, tr_out);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_checkpoint, ev_sel, ev_mode, ev_channel, ev_loss_prob, ev_report);
        }
        if (ab->parsed()) {
            ab_cfg.train_seeds.clear();
            for (int s = 1; s <= ab_seeds; ++s) ab_cfg.train_seeds.push_back(static_cast<uint64_t>(s));
            return cmd_ablate(ab_dir, ab_report, ab_cfg);
        }
        if (cb->parsed()) {
            return cmd_codec_bench(cb_dir, cb_channel, cb_loss_prob, cb_report, cb_stride);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
