#pragma once

// Central finite-difference verification of the analytic gradients. The
// check is only meaningful where the loss is differentiable, so any ReLU
// unit that changes state between the two perturbed evaluations invalidates
// that case; such cases are detected exactly via the activation masks and
// the whole case is re-drawn from the next seed.

#include <cmath>
#include <vector>

#include "coopdrive/hgat.hpp"
#include "helpers.hpp"

namespace testutil {

using namespace coopdrive;

inline double loss_only(const NetGraph& g, Command cmd, Action label,
                        const std::vector<double>& params, HgatWorkspace& ws) {
    hgat_forward(g, cmd, params, ws);
    const int y = label == Action::brake ? 0 : 1;
    const double mx = std::max(ws.z3[0], ws.z3[1]);
    return mx + std::log(std::exp(ws.z3[0] - mx) + std::exp(ws.z3[1] - mx)) - ws.z3[y];
}

/// Signs of every ReLU pre-activation in the last forward pass.
inline std::vector<char> relu_mask(const HgatWorkspace& ws) {
    std::vector<char> mask;
    for (int l = 0; l < kLayers; ++l) {
        for (int t = 0; t < kTypes; ++t) {
            for (int m = 0; m < kHeads; ++m) {
                for (double s : ws.head[l][t][m].score) mask.push_back(s > 0.0 ? 1 : 0);
                for (double p : ws.head[l][t][m].pre) mask.push_back(p > 0.0 ? 1 : 0);
            }
        }
    }
    for (double z : ws.z1) mask.push_back(z > 0.0 ? 1 : 0);
    for (double z : ws.z2) mask.push_back(z > 0.0 ? 1 : 0);
    return mask;
}

struct GradCheckResult {
    bool usable = false;        // false when a kink invalidated the case
    double worst_rel = 0.0;     // worst relative error over all parameters
    size_t worst_param = 0;
    size_t params_checked = 0;
};

/// Checks every parameter of one random case. eps and the tolerance follow
/// the acceptance gate: central differences, eps = 1e-4, relative error
/// <= 1e-3 with a 1e-6 absolute floor.
inline GradCheckResult gradcheck_case(uint64_t seed, double eps = 1e-4) {
    const ParamLayout& L = ParamLayout::get();
    const MergedGraph mg = make_random_merged(seed, 3, 3, 30.0);
    const NetGraph g = to_net_graph(mg);
    const Command cmd = static_cast<Command>(seed % kCommandCount);
    const Action label = (seed % 2 == 0) ? Action::brake : Action::go;
    std::vector<double> params = init_params(seed ^ 0xabcdef);

    HgatWorkspace ws;
    std::vector<double> grad(L.total(), 0.0);
    hgat_loss_grad(g, cmd, label, 1.0, params, grad, ws);

    GradCheckResult result;
    result.params_checked = L.total();
    for (size_t i = 0; i < L.total(); ++i) {
        const double saved = params[i];
        params[i] = saved + eps;
        const double lp = loss_only(g, cmd, label, params, ws);
        const std::vector<char> mask_p = relu_mask(ws);
        params[i] = saved - eps;
        const double lm = loss_only(g, cmd, label, params, ws);
        const std::vector<char> mask_m = relu_mask(ws);
        params[i] = saved;

        if (mask_p != mask_m) return result;  // kink crossed: case unusable

        const double fd = (lp - lm) / (2.0 * eps);
        const double err = std::abs(fd - grad[i]);
        const double scale = std::max(std::abs(fd), std::abs(grad[i]));
        const double rel = err / std::max(scale, 1e-3);  // 1e-6 floor / 1e-3 rel
        if (rel > result.worst_rel) {
            result.worst_rel = rel;
            result.worst_param = i;
        }
    }
    result.usable = true;
    return result;
}

/// Runs `cases` usable gradient checks, re-drawing kink-invalidated cases.
/// Returns the worst relative error seen.
inline double gradcheck_suite(int cases, uint64_t seed_base, int* kinks_skipped = nullptr) {
    double worst = 0.0;
    int done = 0;
    int skipped = 0;
    uint64_t seed = seed_base;
    while (done < cases) {
        const GradCheckResult r = gradcheck_case(seed++);
        if (!r.usable) {
            ++skipped;
            continue;
        }
        worst = std::max(worst, r.worst_rel);
        ++done;
    }
    if (kinks_skipped != nullptr) *kinks_skipped = skipped;
    return worst;
}

}  // namespace testutil
