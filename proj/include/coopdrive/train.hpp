#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coopdrive/dataset.hpp"
#include "coopdrive/hgat.hpp"
#include "coopdrive/rng.hpp"

// Imitation-learning loop: ADAM on the mean (optionally class-weighted)
// cross-entropy over shuffled mini-batches. Batch gradients may be evaluated
// on several threads; instances are partitioned in fixed contiguous chunks
// and partial gradients reduced in chunk order, so the result is identical
// for any thread count.

namespace coopdrive {

struct TrainConfig {
    int epochs = 100;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 32;
    uint64_t seed = 0;
    bool class_weights = true;  // inverse-frequency weights in the loss
    int jobs = 1;
};

class TrainingDivergence : public std::runtime_error {
  public:
    explicit TrainingDivergence(int epoch)
        : std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch)),
          epoch(epoch) {}
    int epoch;
};

struct TrainResult {
    std::vector<double> params;
    std::vector<double> epoch_loss;  // weighted mean cross-entropy per epoch
};

inline TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (ds.instances.empty()) throw ConfigError("training dataset is empty");

    const ParamLayout& L = ParamLayout::get();
    TrainResult result;
    result.params = init_params(cfg.seed);

    double weight[2] = {1.0, 1.0};  // [brake, go]
    if (cfg.class_weights) {
        const double total = static_cast<double>(ds.instances.size());
        const double brake = static_cast<double>(ds.stats.brake_instances);
        const double go = total - brake;
        if (brake > 0.0 && go > 0.0) {
            weight[0] = total / (2.0 * brake);
            weight[1] = total / (2.0 * go);
        }
    }

    std::vector<double> m(L.total(), 0.0), v(L.total(), 0.0), grad(L.total(), 0.0);
    const int jobs = std::max(1, cfg.jobs);
    std::vector<std::vector<double>> partial_grad(static_cast<size_t>(jobs));
    std::vector<HgatWorkspace> ws(static_cast<size_t>(jobs));

    std::vector<size_t> order(ds.instances.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        RngStream epoch_rng = RngStream(cfg.seed).substream(static_cast<uint64_t>(epoch) + 7);
        epoch_rng.shuffle(order);

        double epoch_loss = 0.0, epoch_weight = 0.0;
        for (size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<size_t>(cfg.batch_size)) {
            const size_t batch_end =
                std::min(order.size(), batch_start + static_cast<size_t>(cfg.batch_size));
            const size_t batch_n = batch_end - batch_start;

            double loss_sum = 0.0, weight_sum = 0.0;
            if (jobs == 1 || batch_n < 8) {
                partial_grad[0].assign(L.total(), 0.0);
                for (size_t k = batch_start; k < batch_end; ++k) {
                    const Instance& inst = ds.instances[order[k]];
                    const double w = weight[inst.label == Action::brake ? 0 : 1];
                    loss_sum += hgat_loss_grad(inst.net, inst.cmd, inst.label, w, result.params,
                                               partial_grad[0], ws[0]);
                    weight_sum += w;
                }
                grad = partial_grad[0];
            } else {
                std::vector<double> losses(static_cast<size_t>(jobs), 0.0);
                std::vector<double> weights(static_cast<size_t>(jobs), 0.0);
                std::vector<std::thread> threads;
                const size_t chunk = (batch_n + static_cast<size_t>(jobs) - 1) / jobs;
                for (int j = 0; j < jobs; ++j) {
                    threads.emplace_back([&, j]() {
                        partial_grad[static_cast<size_t>(j)].assign(L.total(), 0.0);
                        const size_t lo = batch_start + static_cast<size_t>(j) * chunk;
                        const size_t hi = std::min(batch_end, lo + chunk);
                        for (size_t k = lo; k < hi && k < batch_end; ++k) {
                            const Instance& inst = ds.instances[order[k]];
                            const double w = weight[inst.label == Action::brake ? 0 : 1];
                            losses[static_cast<size_t>(j)] +=
                                hgat_loss_grad(inst.net, inst.cmd, inst.label, w, result.params,
                                               partial_grad[static_cast<size_t>(j)],
                                               ws[static_cast<size_t>(j)]);
                            weights[static_cast<size_t>(j)] += w;
                        }
                    });
                }
                for (auto& t : threads) t.join();
                grad.assign(L.total(), 0.0);
                for (int j = 0; j < jobs; ++j) {
                    loss_sum += losses[static_cast<size_t>(j)];
                    weight_sum += weights[static_cast<size_t>(j)];
                    for (size_t i = 0; i < grad.size(); ++i) {
                        grad[i] += partial_grad[static_cast<size_t>(j)][i];
                    }
                }
            }

            if (!std::isfinite(loss_sum)) throw TrainingDivergence(epoch);
            const double inv_w = 1.0 / weight_sum;
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (size_t i = 0; i < grad.size(); ++i) {
                const double gi = grad[i] * inv_w;
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                result.params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
            }
            epoch_loss += loss_sum;
            epoch_weight += weight_sum;
        }
        result.epoch_loss.push_back(epoch_loss / epoch_weight);
    }
    return result;
}

}  // namespace coopdrive
