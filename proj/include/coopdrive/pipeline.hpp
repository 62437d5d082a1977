#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coopdrive/dataset.hpp"
#include "coopdrive/episode_io.hpp"
#include "coopdrive/hgat.hpp"
#include "coopdrive/train.hpp"

// Evaluation metrics and the ablation matrix.
//   AD  (accident detection): recall on ground-truth brake instances.
//   EAR (expert action rate): fraction of instances matching the expert.
//   PS  (package size):       bytes of the shared V2V payload.

namespace coopdrive {

struct ConfusionMatrix {
    size_t tp = 0;  // brake predicted brake
    size_t fn = 0;  // brake predicted go
    size_t fp = 0;  // go predicted brake
    size_t tn = 0;  // go predicted go
    size_t total() const { return tp + fn + fp + tn; }
};

struct EvalMetrics {
    ConfusionMatrix confusion;
    double ad = 0.0;
    double ear = 0.0;
};

inline EvalMetrics compute_metrics(std::span<const Action> labels, std::span<const Action> preds) {
    EvalMetrics m;
    for (size_t i = 0; i < labels.size(); ++i) {
        const bool truth_brake = labels[i] == Action::brake;
        const bool pred_brake = preds[i] == Action::brake;
        if (truth_brake && pred_brake) ++m.confusion.tp;
        if (truth_brake && !pred_brake) ++m.confusion.fn;
        if (!truth_brake && pred_brake) ++m.confusion.fp;
        if (!truth_brake && !pred_brake) ++m.confusion.tn;
    }
    const size_t brakes = m.confusion.tp + m.confusion.fn;
    m.ad = brakes == 0 ? 1.0 : static_cast<double>(m.confusion.tp) / static_cast<double>(brakes);
    m.ear = labels.empty()
                ? 0.0
                : static_cast<double>(m.confusion.tp + m.confusion.tn) / static_cast<double>(labels.size());
    return m;
}

struct EvalReport {
    std::string scenario;
    std::string mode;
    EvalMetrics metrics;
    size_t instances = 0;
    double brake_fraction = 0.0;
    size_t packets_sent = 0;
    double ps_mean_bytes = 0.0;
    size_t ps_max_bytes = 0;
    // wall-clock figures; reported on stdout and in the manifest, never in
    // deterministic report files
    double forward_ms_mean = 0.0;
    double build_ms_mean = 0.0;
};

inline EvalReport evaluate(const Dataset& test, std::span<const double> params,
                           const std::string& scenario = "") {
    EvalReport r;
    r.scenario = scenario;
    r.mode = to_string(test.mode);
    r.instances = test.instances.size();
    r.brake_fraction = test.stats.brake_fraction();
    r.packets_sent = test.stats.packets_sent;
    r.ps_mean_bytes = test.stats.ps_mean();
    r.ps_max_bytes = test.stats.ps_max_bytes;
    r.build_ms_mean =
        test.instances.empty() ? 0.0 : test.stats.build_ms_total / test.instances.size();

    std::vector<Action> labels, preds;
    labels.reserve(test.instances.size());
    preds.reserve(test.instances.size());
    HgatWorkspace ws;
    const auto t0 = std::chrono::steady_clock::now();
    for (const Instance& inst : test.instances) {
        const Prediction p = hgat_forward(inst.net, inst.cmd, params, ws);
        labels.push_back(inst.label);
        preds.push_back(p.action);
    }
    const auto t1 = std::chrono::steady_clock::now();
    r.forward_ms_mean = test.instances.empty()
                            ? 0.0
                            : std::chrono::duration<double, std::milli>(t1 - t0).count() /
                                  test.instances.size();
    r.metrics = compute_metrics(labels, preds);
    return r;
}

// ---------------------------------------------------------------------------
// Episode file loading and the 4-mode x 3-scenario ablation matrix.

inline std::string episode_filename(ScenarioId scenario, int trial) {
    std::ostringstream os;
    os << to_string(scenario) << "_" << std::setw(3) << std::setfill('0') << trial << ".bin";
    return os.str();
}

/// Loads trials `first..first+count-1` of one scenario from a directory.
inline std::vector<Episode> load_trials(const std::string& dir, ScenarioId scenario, int first,
                                        int count) {
    std::vector<Episode> out;
    for (int t = first; t < first + count; ++t) {
        const auto path = std::filesystem::path(dir) / episode_filename(scenario, t);
        if (!std::filesystem::exists(path)) {
            throw ConfigError("missing episode file: " + path.string());
        }
        out.push_back(load_episode(path.string()));
    }
    return out;
}

struct AblationRun {
    std::string scenario;
    AblationMode mode = AblationMode::full;
    uint64_t train_seed = 0;
    double ad = 0.0;
    double ear = 0.0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

struct AblationTask {
    ScenarioId scenario;
    AblationMode mode;
    uint64_t train_seed;
};

/// Median over a non-empty vector (mean of the middle pair for even sizes).
inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct AblationConfig {
    std::vector<uint64_t> train_seeds = {1, 2, 3, 4, 5};
    int train_trials = 12;
    int test_trials = 12;
    TrainConfig train;
    ChannelConfig channel = ChannelConfig::dsrc();
    uint64_t channel_seed = 99;
    int jobs = 1;  // parallelism across (scenario, mode, seed) runs
};

/// Runs the full matrix over episode files in `dir`. Datasets are assembled
/// once per (scenario, mode) and shared across training seeds.
inline std::vector<AblationRun> run_ablation_matrix(const std::string& dir,
                                                    const AblationConfig& cfg) {
    const ScenarioId scenarios[3] = {ScenarioId::overtaking, ScenarioId::left_turn,
                                     ScenarioId::street_crossing};
    const AblationMode modes[4] = {AblationMode::nt_ns, AblationMode::t_ns, AblationMode::nt_s,
                                   AblationMode::full};
    std::vector<AblationRun> runs;

    for (ScenarioId scenario : scenarios) {
        const std::vector<Episode> train_eps = load_trials(dir, scenario, 0, cfg.train_trials);
        const std::vector<Episode> test_eps =
            load_trials(dir, scenario, cfg.train_trials, cfg.test_trials);

        for (AblationMode mode : modes) {
            AssembleConfig ac;
            ac.mode = mode;
            ac.channel = cfg.channel;
            const Dataset train_ds =
                assemble_dataset(train_eps, ac, RngStream(cfg.channel_seed));
            const Dataset test_ds =
                assemble_dataset(test_eps, ac, RngStream(cfg.channel_seed + 1));

            std::vector<AblationRun> seed_runs(cfg.train_seeds.size());
            std::vector<std::thread> pool;
            const int jobs = std::max(1, cfg.jobs);
            for (int j = 0; j < jobs; ++j) {
                pool.emplace_back([&, j]() {
                    for (size_t s = static_cast<size_t>(j); s < cfg.train_seeds.size();
                         s += static_cast<size_t>(jobs)) {
                        TrainConfig tc = cfg.train;
                        tc.seed = cfg.train_seeds[s];
                        const TrainResult tr = train(train_ds, tc);
                        const EvalReport er = evaluate(test_ds, tr.params, to_string(scenario));
                        AblationRun run;
                        run.scenario = to_string(scenario);
                        run.mode = mode;
                        run.train_seed = tc.seed;
                        run.ad = er.metrics.ad;
                        run.ear = er.metrics.ear;
                        run.initial_loss = tr.epoch_loss.front();
                        run.final_loss = tr.epoch_loss.back();
                        seed_runs[s] = run;
                    }
                });
            }
            for (auto& t : pool) t.join();
            for (const AblationRun& r : seed_runs) runs.push_back(r);
        }
    }
    return runs;
}

/// Aligned text table of per-(scenario, mode) median AD / EAR.
inline std::string render_ablation_table(const std::vector<AblationRun>& runs) {
    const char* scenarios[3] = {"overtaking", "left_turn", "street_crossing"};
    const AblationMode modes[4] = {AblationMode::nt_ns, AblationMode::t_ns, AblationMode::nt_s,
                                   AblationMode::full};
    std::ostringstream os;
    os << std::left << std::setw(8) << "mode";
    for (const char* s : scenarios) os << std::right << std::setw(12) << s << "  AD/EAR";
    os << "\n";
    for (AblationMode mode : modes) {
        os << std::left << std::setw(8) << to_string(mode);
        for (const char* s : scenarios) {
            std::vector<double> ads, ears;
            for (const AblationRun& r : runs) {
                if (r.scenario == s && r.mode == mode) {
                    ads.push_back(r.ad);
                    ears.push_back(r.ear);
                }
            }
            os << std::right << std::setw(12) << std::fixed << std::setprecision(4)
               << (ads.empty() ? 0.0 : median(ads)) << "/" << std::setprecision(4)
               << (ears.empty() ? 0.0 : median(ears));
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace coopdrive
