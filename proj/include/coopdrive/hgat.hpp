#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coopdrive/core.hpp"
#include "coopdrive/merge.hpp"
#include "coopdrive/rng.hpp"

// Heterogeneous spatiotemporal graph attention network with analytic
// reverse-mode gradients.
//
// Architecture, per decision graph:
//   h_i = Wv [x, y, z, is_ego]                       projection to 12 dims
//   two branches, one per edge type (spatial / temporal); each branch is a
//   2-layer, 4-head attention stack over that type's incidences:
//     score(i<-j) = ReLU(a . [W h_i || W h_j || We e_ij]), softmax over j
//     head out    = ReLU(W h_i + sum_j alpha_ij (W h_j + We e_ij))
//   heads concatenate after layer 1 (24 dims) and average after layer 2
//   (6 dims). Nodes without neighbors of a type keep their self term.
//   Type importance: beta_t = softmax over types of
//     mean_{i in V_t} q . tanh(Wb h_i^t + b),  V_t = nodes with type-t edges;
//   an absent type gets weight 0 (both absent: spatial branch wins).
//   h'_ego = beta_spat h_ego^spat + beta_temp h_ego^temp
//   p = softmax(MLP([h'_ego || cmd])), 3 linear layers, ReLU after 1 and 2.
//
// Positions enter in a scaled frame (kPositionInputScale) so that typical
// preactivations stay O(1); spatial edge attrs are distances in the same
// scaled frame, temporal attrs are raw seconds.

namespace coopdrive {

inline constexpr int kNodeInputDim = 4;
inline constexpr int kProjectedDim = 12;
inline constexpr int kHeadDim = 6;
inline constexpr int kHeads = 4;
inline constexpr int kLayers = 2;
inline constexpr int kTypes = 2;  // 0 = spatial, 1 = temporal
inline constexpr int kConcatDim = kHeadDim * kHeads;          // 24
inline constexpr int kScoreDim = 3 * kHeadDim;                // 18
inline constexpr int kMlpHidden = 32;
inline constexpr int kMlpInputDim = kHeadDim + kCommandCount; // 12
inline constexpr double kPositionInputScale = 0.02;

inline constexpr int layer_input_dim(int layer) { return layer == 0 ? kProjectedDim : kConcatDim; }

// ---------------------------------------------------------------------------
// Parameter layout: one flat vector, tensors addressed by offset.

struct TensorSpec {
    std::string name;
    int rows = 0;
    int cols = 0;  // 0 for vectors
    int fan_in = 0;
    size_t offset = 0;
    size_t size() const { return static_cast<size_t>(rows) * (cols == 0 ? 1 : cols); }
};

class ParamLayout {
  public:
    static const ParamLayout& get() {
        static const ParamLayout layout;
        return layout;
    }

    size_t total() const { return total_; }
    const std::vector<TensorSpec>& tensors() const { return tensors_; }

    size_t wv; // 12 x 4
    size_t w[kLayers][kTypes][kHeads];   // 6 x input_dim
    size_t we[kLayers][kTypes][kHeads];  // 6
    size_t a[kLayers][kTypes][kHeads];   // 18
    size_t wb, bb, q;                    // 6x6, 6, 6
    size_t mlp_w1, mlp_b1, mlp_w2, mlp_b2, mlp_w3, mlp_b3;

    /// Architecture fingerprint, embedded in checkpoints.
    uint64_t arch_hash() const {
        uint64_t h = fnv1a("hgat-v1");
        for (const TensorSpec& t : tensors_) {
            h = fnv1a(t.name, h);
            h = fnv1a(&t.rows, sizeof(t.rows), h);
            h = fnv1a(&t.cols, sizeof(t.cols), h);
        }
        return h;
    }

  private:
    ParamLayout() {
        wv = add("wv", kProjectedDim, kNodeInputDim, kNodeInputDim);
        const char* type_tag[kTypes] = {"spat", "temp"};
        for (int l = 0; l < kLayers; ++l) {
            for (int t = 0; t < kTypes; ++t) {
                for (int m = 0; m < kHeads; ++m) {
                    const std::string suffix = ".l" + std::to_string(l) + "." + type_tag[t] +
                                               ".h" + std::to_string(m);
                    const int din = layer_input_dim(l);
                    w[l][t][m] = add("w" + suffix, kHeadDim, din, din);
                    we[l][t][m] = add("we" + suffix, kHeadDim, 0, 1);
                    a[l][t][m] = add("a" + suffix, kScoreDim, 0, kScoreDim);
                }
            }
        }
        wb = add("wb", kHeadDim, kHeadDim, kHeadDim);
        bb = add("bb", kHeadDim, 0, kHeadDim);
        q = add("q", kHeadDim, 0, kHeadDim);
        mlp_w1 = add("mlp.w1", kMlpHidden, kMlpInputDim, kMlpInputDim);
        mlp_b1 = add("mlp.b1", kMlpHidden, 0, kMlpInputDim);
        mlp_w2 = add("mlp.w2", kMlpHidden, kMlpHidden, kMlpHidden);
        mlp_b2 = add("mlp.b2", kMlpHidden, 0, kMlpHidden);
        mlp_w3 = add("mlp.w3", 2, kMlpHidden, kMlpHidden);
        mlp_b3 = add("mlp.b3", 2, 0, kMlpHidden);
        total_ = running_;
    }

    size_t add(std::string name, int rows, int cols, int fan_in) {
        TensorSpec t{std::move(name), rows, cols, fan_in, running_};
        running_ += t.size();
        tensors_.push_back(t);
        return t.offset;
    }

    std::vector<TensorSpec> tensors_;
    size_t running_ = 0;
    size_t total_ = 0;
};

/// Seeded uniform(-s, s) init with s = 1/sqrt(fan_in) per tensor.
inline std::vector<double> init_params(uint64_t seed) {
    const ParamLayout& L = ParamLayout::get();
    std::vector<double> p(L.total());
    RngStream rng(splitmix64(seed));
    for (const TensorSpec& t : L.tensors()) {
        const double s = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
        for (size_t k = 0; k < t.size(); ++k) p[t.offset + k] = rng.uniform(-s, s);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Network input: node features plus per-type undirected incidence lists.

struct NetGraph {
    int n = 0;
    int ego = 0;
    std::vector<double> x;  // n x 4, already scaled
    struct Adjacency {
        std::vector<int> offsets;    // n + 1
        std::vector<int> neighbor;   // flattened neighbor indices
        std::vector<double> attr;    // matching edge attrs
        int degree(int i) const { return offsets[i + 1] - offsets[i]; }
    };
    std::array<Adjacency, kTypes> adj;

    bool in_vset(int type, int i) const { return adj[type].degree(i) > 0; }
    size_t vset_size(int type) const {
        size_t c = 0;
        for (int i = 0; i < n; ++i) c += in_vset(type, i) ? 1 : 0;
        return c;
    }
};

/// Lowers a merged decision graph into the scaled network input.
inline NetGraph to_net_graph(const MergedGraph& mg, double scale = kPositionInputScale) {
    const SpatioTemporalGraph& g = mg.graph;
    NetGraph out;
    out.n = static_cast<int>(g.nodes.size());
    out.ego = mg.ego_node;
    out.x.resize(static_cast<size_t>(out.n) * kNodeInputDim);
    for (int i = 0; i < out.n; ++i) {
        const STNode& nd = g.nodes[static_cast<size_t>(i)];
        double* xi = &out.x[static_cast<size_t>(i) * kNodeInputDim];
        xi[0] = nd.position.x * scale;
        xi[1] = nd.position.y * scale;
        xi[2] = nd.position.z * scale;
        xi[3] = nd.is_ego ? 1.0 : 0.0;
    }
    for (int t = 0; t < kTypes; ++t) {
        std::vector<int> degree(static_cast<size_t>(out.n), 0);
        for (const STEdge& e : g.edges) {
            if (static_cast<int>(e.kind) != t) continue;
            ++degree[static_cast<size_t>(e.src)];
            ++degree[static_cast<size_t>(e.dst)];
        }
        auto& adj = out.adj[static_cast<size_t>(t)];
        adj.offsets.assign(static_cast<size_t>(out.n) + 1, 0);
        for (int i = 0; i < out.n; ++i) {
            adj.offsets[static_cast<size_t>(i) + 1] =
                adj.offsets[static_cast<size_t>(i)] + degree[static_cast<size_t>(i)];
        }
        adj.neighbor.resize(static_cast<size_t>(adj.offsets.back()));
        adj.attr.resize(adj.neighbor.size());
        std::vector<int> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
        for (const STEdge& e : g.edges) {
            if (static_cast<int>(e.kind) != t) continue;
            const double attr = (t == 0) ? e.attr * scale : e.attr;
            adj.neighbor[static_cast<size_t>(cursor[static_cast<size_t>(e.src)])] = e.dst;
            adj.attr[static_cast<size_t>(cursor[static_cast<size_t>(e.src)]++)] = attr;
            adj.neighbor[static_cast<size_t>(cursor[static_cast<size_t>(e.dst)])] = e.src;
            adj.attr[static_cast<size_t>(cursor[static_cast<size_t>(e.dst)]++)] = attr;
        }
    }
    return out;
}

struct Prediction {
    double p_brake = 0.5;
    double p_go = 0.5;
    double beta_spat = 1.0;
    double beta_temp = 0.0;
    Action action = Action::brake;
};

// All intermediate state of one forward pass, reused across calls and read
// back by the backward pass.
struct HgatWorkspace {
    int n = 0;
    std::vector<double> h0;  // n x 12

    struct HeadState {
        std::vector<double> u;      // n x 6
        std::vector<double> score;  // per incidence, pre-ReLU
        std::vector<double> alpha;  // per incidence
        std::vector<double> pre;    // n x 6 aggregation pre-activation
        std::vector<double> g;      // n x 6 head output
    };
    HeadState head[kLayers][kTypes][kHeads];
    std::vector<double> concat[kTypes];  // n x 24
    std::vector<double> htype[kTypes];   // n x 6
    std::vector<double> ytanh[kTypes];   // n x 6 (valid for V_t members)
    double beta_raw[kTypes] = {0.0, 0.0};
    double beta[kTypes] = {1.0, 0.0};
    bool type_present[kTypes] = {false, false};

    double hprime[kHeadDim] = {0};
    double mlp_in[kMlpInputDim] = {0};
    double z1[kMlpHidden], r1[kMlpHidden], z2[kMlpHidden], r2[kMlpHidden];
    double z3[2], p[2];

    // backward scratch
    std::vector<double> d_h0;
    std::vector<double> d_u, d_pre, d_aiu, d_aju, d_alpha, d_score;
    std::vector<double> d_concat[kTypes];
    std::vector<double> d_htype[kTypes];
};

namespace detail {

inline void matvec(const double* m, int rows, int cols, const double* v, double* out) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
}

/// One attention layer for one (type, head): reads F (n x din), fills hs.
inline void attention_forward(const NetGraph& g, int type, const double* F, int din,
                              const double* W, const double* We, const double* a,
                              HgatWorkspace::HeadState& hs) {
    const int n = g.n;
    const auto& adj = g.adj[static_cast<size_t>(type)];
    hs.u.resize(static_cast<size_t>(n) * kHeadDim);
    hs.score.resize(adj.neighbor.size());
    hs.alpha.resize(adj.neighbor.size());
    hs.pre.resize(static_cast<size_t>(n) * kHeadDim);
    hs.g.resize(static_cast<size_t>(n) * kHeadDim);

    for (int i = 0; i < n; ++i) {
        matvec(W, kHeadDim, din, F + static_cast<size_t>(i) * din, &hs.u[static_cast<size_t>(i) * kHeadDim]);
    }

    const double* ai = a;
    const double* aj = a + kHeadDim;
    const double* ae = a + 2 * kHeadDim;
    double ce = 0.0;
    for (int c = 0; c < kHeadDim; ++c) ce += ae[c] * We[c];

    // per-node query/key dots
    thread_local std::vector<double> qdot, kdot;
    qdot.resize(static_cast<size_t>(n));
    kdot.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* ui = &hs.u[static_cast<size_t>(i) * kHeadDim];
        double qi = 0.0, ki = 0.0;
        for (int c = 0; c < kHeadDim; ++c) {
            qi += ai[c] * ui[c];
            ki += aj[c] * ui[c];
        }
        qdot[static_cast<size_t>(i)] = qi;
        kdot[static_cast<size_t>(i)] = ki;
    }

    for (int i = 0; i < n; ++i) {
        const int lo = adj.offsets[static_cast<size_t>(i)];
        const int hi = adj.offsets[static_cast<size_t>(i) + 1];
        double* pre = &hs.pre[static_cast<size_t>(i) * kHeadDim];
        const double* ui = &hs.u[static_cast<size_t>(i) * kHeadDim];
        for (int c = 0; c < kHeadDim; ++c) pre[c] = ui[c];

        if (hi > lo) {
            double mx = -1e300;
            for (int k = lo; k < hi; ++k) {
                const int j = adj.neighbor[static_cast<size_t>(k)];
                double z = qdot[static_cast<size_t>(i)] + kdot[static_cast<size_t>(j)] +
                           ce * adj.attr[static_cast<size_t>(k)];
                z = z > 0.0 ? z : 0.0;  // ReLU on the raw score
                hs.score[static_cast<size_t>(k)] = z;
                mx = z > mx ? z : mx;
            }
            double denom = 0.0;
            for (int k = lo; k < hi; ++k) {
                const double e = std::exp(hs.score[static_cast<size_t>(k)] - mx);
                hs.alpha[static_cast<size_t>(k)] = e;
                denom += e;
            }
            const double inv = 1.0 / denom;
            for (int k = lo; k < hi; ++k) {
                const double al = hs.alpha[static_cast<size_t>(k)] * inv;
                hs.alpha[static_cast<size_t>(k)] = al;
                const int j = adj.neighbor[static_cast<size_t>(k)];
                const double* uj = &hs.u[static_cast<size_t>(j) * kHeadDim];
                const double e = adj.attr[static_cast<size_t>(k)];
                for (int c = 0; c < kHeadDim; ++c) pre[c] += al * (uj[c] + We[c] * e);
            }
        }
        double* gi = &hs.g[static_cast<size_t>(i) * kHeadDim];
        for (int c = 0; c < kHeadDim; ++c) gi[c] = pre[c] > 0.0 ? pre[c] : 0.0;
    }
}

/// Backward for one (type, head). dG is the gradient on hs.g; accumulates
/// parameter grads and the gradient on the layer input dF.
inline void attention_backward(const NetGraph& g, int type, const double* F, int din,
                               const double* W, const double* We, const double* a,
                               const HgatWorkspace::HeadState& hs, const double* dG,
                               double* dW, double* dWe, double* da, double* dF,
                               HgatWorkspace& ws) {
    const int n = g.n;
    const auto& adj = g.adj[static_cast<size_t>(type)];
    const double* ai = a;
    const double* aj = a + kHeadDim;
    const double* ae = a + 2 * kHeadDim;
    double ce = 0.0;
    for (int c = 0; c < kHeadDim; ++c) ce += ae[c] * We[c];

    ws.d_u.assign(static_cast<size_t>(n) * kHeadDim, 0.0);
    ws.d_aiu.assign(static_cast<size_t>(n), 0.0);
    ws.d_aju.assign(static_cast<size_t>(n), 0.0);
    ws.d_alpha.resize(adj.neighbor.size());
    ws.d_score.resize(adj.neighbor.size());
    double dce = 0.0;

    for (int i = 0; i < n; ++i) {
        const int lo = adj.offsets[static_cast<size_t>(i)];
        const int hi = adj.offsets[static_cast<size_t>(i) + 1];
        const double* pre = &hs.pre[static_cast<size_t>(i) * kHeadDim];
        const double* dgi = dG + static_cast<size_t>(i) * kHeadDim;
        double dM[kHeadDim];
        for (int c = 0; c < kHeadDim; ++c) dM[c] = pre[c] > 0.0 ? dgi[c] : 0.0;

        double* dui = &ws.d_u[static_cast<size_t>(i) * kHeadDim];
        for (int c = 0; c < kHeadDim; ++c) dui[c] += dM[c];

        if (hi <= lo) continue;

        // through the aggregation
        for (int k = lo; k < hi; ++k) {
            const int j = adj.neighbor[static_cast<size_t>(k)];
            const double* uj = &hs.u[static_cast<size_t>(j) * kHeadDim];
            const double e = adj.attr[static_cast<size_t>(k)];
            const double al = hs.alpha[static_cast<size_t>(k)];
            double dal = 0.0;
            double* duj = &ws.d_u[static_cast<size_t>(j) * kHeadDim];
            for (int c = 0; c < kHeadDim; ++c) {
                dal += dM[c] * (uj[c] + We[c] * e);
                duj[c] += al * dM[c];
                dWe[c] += al * e * dM[c];
            }
            ws.d_alpha[static_cast<size_t>(k)] = dal;
        }
        // through the softmax
        double sdot = 0.0;
        for (int k = lo; k < hi; ++k) {
            sdot += hs.alpha[static_cast<size_t>(k)] * ws.d_alpha[static_cast<size_t>(k)];
        }
        for (int k = lo; k < hi; ++k) {
            const double ds =
                hs.alpha[static_cast<size_t>(k)] * (ws.d_alpha[static_cast<size_t>(k)] - sdot);
            const double dz = hs.score[static_cast<size_t>(k)] > 0.0 ? ds : 0.0;
            ws.d_score[static_cast<size_t>(k)] = dz;
            const int j = adj.neighbor[static_cast<size_t>(k)];
            ws.d_aiu[static_cast<size_t>(i)] += dz;
            ws.d_aju[static_cast<size_t>(j)] += dz;
            dce += dz * adj.attr[static_cast<size_t>(k)];
        }
    }

    // dot-product terms back to u and the attention vector
    for (int i = 0; i < n; ++i) {
        const double* ui = &hs.u[static_cast<size_t>(i) * kHeadDim];
        double* dui = &ws.d_u[static_cast<size_t>(i) * kHeadDim];
        const double dq = ws.d_aiu[static_cast<size_t>(i)];
        const double dk = ws.d_aju[static_cast<size_t>(i)];
        for (int c = 0; c < kHeadDim; ++c) {
            dui[c] += dq * ai[c] + dk * aj[c];
            da[c] += dq * ui[c];
            da[kHeadDim + c] += dk * ui[c];
        }
    }
    for (int c = 0; c < kHeadDim; ++c) {
        da[2 * kHeadDim + c] += dce * We[c];
        dWe[c] += dce * ae[c];
    }

    // u = W F
    for (int i = 0; i < n; ++i) {
        const double* fi = F + static_cast<size_t>(i) * din;
        const double* dui = &ws.d_u[static_cast<size_t>(i) * kHeadDim];
        double* dfi = dF + static_cast<size_t>(i) * din;
        for (int r = 0; r < kHeadDim; ++r) {
            const double dur = dui[r];
            if (dur == 0.0) continue;
            double* wrow = dW + static_cast<size_t>(r) * din;
            const double* Wrow = W + static_cast<size_t>(r) * din;
            for (int c = 0; c < din; ++c) {
                wrow[c] += dur * fi[c];
                dfi[c] += dur * Wrow[c];
            }
        }
    }
}

}  // namespace detail

/// Forward pass; fills the workspace so a backward pass (or the invariant
/// checks) can follow.
inline Prediction hgat_forward(const NetGraph& g, Command cmd, std::span<const double> params,
                               HgatWorkspace& ws) {
    const ParamLayout& L = ParamLayout::get();
    const int n = g.n;
    ws.n = n;

    ws.h0.resize(static_cast<size_t>(n) * kProjectedDim);
    for (int i = 0; i < n; ++i) {
        detail::matvec(&params[L.wv], kProjectedDim, kNodeInputDim,
                       &g.x[static_cast<size_t>(i) * kNodeInputDim],
                       &ws.h0[static_cast<size_t>(i) * kProjectedDim]);
    }

    for (int t = 0; t < kTypes; ++t) {
        ws.type_present[t] = g.vset_size(t) > 0;
        // layer 0 on h0
        for (int m = 0; m < kHeads; ++m) {
            detail::attention_forward(g, t, ws.h0.data(), kProjectedDim, &params[L.w[0][t][m]],
                                      &params[L.we[0][t][m]], &params[L.a[0][t][m]],
                                      ws.head[0][t][m]);
        }
        // concat heads -> layer 1 input
        ws.concat[t].resize(static_cast<size_t>(n) * kConcatDim);
        for (int i = 0; i < n; ++i) {
            for (int m = 0; m < kHeads; ++m) {
                const double* gi = &ws.head[0][t][m].g[static_cast<size_t>(i) * kHeadDim];
                double* out = &ws.concat[t][static_cast<size_t>(i) * kConcatDim + m * kHeadDim];
                for (int c = 0; c < kHeadDim; ++c) out[c] = gi[c];
            }
        }
        for (int m = 0; m < kHeads; ++m) {
            detail::attention_forward(g, t, ws.concat[t].data(), kConcatDim,
                                      &params[L.w[1][t][m]], &params[L.we[1][t][m]],
                                      &params[L.a[1][t][m]], ws.head[1][t][m]);
        }
        // average heads
        ws.htype[t].assign(static_cast<size_t>(n) * kHeadDim, 0.0);
        for (int m = 0; m < kHeads; ++m) {
            for (size_t k = 0; k < ws.htype[t].size(); ++k) {
                ws.htype[t][k] += ws.head[1][t][m].g[k] * (1.0 / kHeads);
            }
        }
    }

    // type importance
    for (int t = 0; t < kTypes; ++t) {
        ws.ytanh[t].assign(static_cast<size_t>(n) * kHeadDim, 0.0);
        ws.beta_raw[t] = 0.0;
        if (!ws.type_present[t]) continue;
        const size_t count = g.vset_size(t);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!g.in_vset(t, i)) continue;
            double pre[kHeadDim];
            detail::matvec(&params[L.wb], kHeadDim, kHeadDim,
                           &ws.htype[t][static_cast<size_t>(i) * kHeadDim], pre);
            double dot = 0.0;
            for (int c = 0; c < kHeadDim; ++c) {
                const double y = std::tanh(pre[c] + params[L.bb + c]);
                ws.ytanh[t][static_cast<size_t>(i) * kHeadDim + c] = y;
                dot += params[L.q + c] * y;
            }
            acc += dot;
        }
        ws.beta_raw[t] = acc / static_cast<double>(count);
    }
    if (ws.type_present[0] && ws.type_present[1]) {
        const double mx = std::max(ws.beta_raw[0], ws.beta_raw[1]);
        const double e0 = std::exp(ws.beta_raw[0] - mx);
        const double e1 = std::exp(ws.beta_raw[1] - mx);
        ws.beta[0] = e0 / (e0 + e1);
        ws.beta[1] = e1 / (e0 + e1);
    } else if (ws.type_present[1]) {
        ws.beta[0] = 0.0;
        ws.beta[1] = 1.0;
    } else {
        ws.beta[0] = 1.0;  // spatial branch also covers the single-node graph
        ws.beta[1] = 0.0;
    }

    for (int c = 0; c < kHeadDim; ++c) {
        const size_t ego = static_cast<size_t>(g.ego) * kHeadDim + c;
        ws.hprime[c] = ws.beta[0] * ws.htype[0][ego] + ws.beta[1] * ws.htype[1][ego];
    }

    // MLP head
    for (int c = 0; c < kHeadDim; ++c) ws.mlp_in[c] = ws.hprime[c];
    for (int c = 0; c < kCommandCount; ++c) {
        ws.mlp_in[kHeadDim + c] = (static_cast<int>(cmd) == c) ? 1.0 : 0.0;
    }
    detail::matvec(&params[L.mlp_w1], kMlpHidden, kMlpInputDim, ws.mlp_in, ws.z1);
    for (int c = 0; c < kMlpHidden; ++c) {
        ws.z1[c] += params[L.mlp_b1 + c];
        ws.r1[c] = ws.z1[c] > 0.0 ? ws.z1[c] : 0.0;
    }
    detail::matvec(&params[L.mlp_w2], kMlpHidden, kMlpHidden, ws.r1, ws.z2);
    for (int c = 0; c < kMlpHidden; ++c) {
        ws.z2[c] += params[L.mlp_b2 + c];
        ws.r2[c] = ws.z2[c] > 0.0 ? ws.z2[c] : 0.0;
    }
    detail::matvec(&params[L.mlp_w3], 2, kMlpHidden, ws.r2, ws.z3);
    ws.z3[0] += params[L.mlp_b3 + 0];
    ws.z3[1] += params[L.mlp_b3 + 1];

    const double mx = std::max(ws.z3[0], ws.z3[1]);
    const double e0 = std::exp(ws.z3[0] - mx);
    const double e1 = std::exp(ws.z3[1] - mx);
    ws.p[0] = e0 / (e0 + e1);
    ws.p[1] = e1 / (e0 + e1);

    Prediction pred;
    pred.p_brake = ws.p[0];
    pred.p_go = ws.p[1];
    pred.beta_spat = ws.beta[0];
    pred.beta_temp = ws.beta[1];
    pred.action = (ws.p[0] >= ws.p[1]) ? Action::brake : Action::go;  // tie -> the safe action
    return pred;
}

/// Weighted cross-entropy loss for one instance plus parameter gradients
/// (accumulated into grad, which must have ParamLayout::total() entries).
/// Runs a fresh forward internally.
inline double hgat_loss_grad(const NetGraph& g, Command cmd, Action label, double weight,
                             std::span<const double> params, std::span<double> grad,
                             HgatWorkspace& ws) {
    const ParamLayout& L = ParamLayout::get();
    hgat_forward(g, cmd, params, ws);
    const int n = g.n;
    const int y = (label == Action::brake) ? 0 : 1;

    // stable -log p_y from the logits
    const double mx = std::max(ws.z3[0], ws.z3[1]);
    const double lse = mx + std::log(std::exp(ws.z3[0] - mx) + std::exp(ws.z3[1] - mx));
    const double loss = weight * (lse - ws.z3[y]);

    // MLP backward
    double dz3[2] = {weight * (ws.p[0] - (y == 0 ? 1.0 : 0.0)),
                     weight * (ws.p[1] - (y == 1 ? 1.0 : 0.0))};
    double dr2[kMlpHidden] = {0};
    for (int r = 0; r < 2; ++r) {
        grad[L.mlp_b3 + r] += dz3[r];
        const double* w3 = &params[L.mlp_w3 + static_cast<size_t>(r) * kMlpHidden];
        double* dw3 = &grad[L.mlp_w3 + static_cast<size_t>(r) * kMlpHidden];
        for (int c = 0; c < kMlpHidden; ++c) {
            dw3[c] += dz3[r] * ws.r2[c];
            dr2[c] += dz3[r] * w3[c];
        }
    }
    double dr1[kMlpHidden] = {0};
    for (int r = 0; r < kMlpHidden; ++r) {
        const double dz2 = ws.z2[r] > 0.0 ? dr2[r] : 0.0;
        if (dz2 == 0.0) continue;
        grad[L.mlp_b2 + r] += dz2;
        const double* w2 = &params[L.mlp_w2 + static_cast<size_t>(r) * kMlpHidden];
        double* dw2 = &grad[L.mlp_w2 + static_cast<size_t>(r) * kMlpHidden];
        for (int c = 0; c < kMlpHidden; ++c) {
            dw2[c] += dz2 * ws.r1[c];
            dr1[c] += dz2 * w2[c];
        }
    }
    double din[kMlpInputDim] = {0};
    for (int r = 0; r < kMlpHidden; ++r) {
        const double dz1 = ws.z1[r] > 0.0 ? dr1[r] : 0.0;
        if (dz1 == 0.0) continue;
        grad[L.mlp_b1 + r] += dz1;
        const double* w1 = &params[L.mlp_w1 + static_cast<size_t>(r) * kMlpInputDim];
        double* dw1 = &grad[L.mlp_w1 + static_cast<size_t>(r) * kMlpInputDim];
        for (int c = 0; c < kMlpInputDim; ++c) {
            dw1[c] += dz1 * ws.mlp_in[c];
            din[c] += dz1 * w1[c];
        }
    }
    double dhprime[kHeadDim];
    for (int c = 0; c < kHeadDim; ++c) dhprime[c] = din[c];

    // fusion and type importance
    double dbeta[2] = {0.0, 0.0};
    for (int t = 0; t < kTypes; ++t) {
        ws.d_htype[t].assign(static_cast<size_t>(n) * kHeadDim, 0.0);
    }
    for (int c = 0; c < kHeadDim; ++c) {
        const size_t ego = static_cast<size_t>(g.ego) * kHeadDim + c;
        dbeta[0] += ws.htype[0][ego] * dhprime[c];
        dbeta[1] += ws.htype[1][ego] * dhprime[c];
        ws.d_htype[0][ego] += ws.beta[0] * dhprime[c];
        ws.d_htype[1][ego] += ws.beta[1] * dhprime[c];
    }
    if (ws.type_present[0] && ws.type_present[1]) {
        const double b0 = ws.beta[0], b1 = ws.beta[1];
        double draw[2];
        draw[0] = b0 * b1 * (dbeta[0] - dbeta[1]);
        draw[1] = b0 * b1 * (dbeta[1] - dbeta[0]);
        for (int t = 0; t < kTypes; ++t) {
            const double scale = draw[t] / static_cast<double>(g.vset_size(t));
            if (scale == 0.0) continue;
            for (int i = 0; i < n; ++i) {
                if (!g.in_vset(t, i)) continue;
                const double* y = &ws.ytanh[t][static_cast<size_t>(i) * kHeadDim];
                const double* h = &ws.htype[t][static_cast<size_t>(i) * kHeadDim];
                double dpre[kHeadDim];
                for (int c = 0; c < kHeadDim; ++c) {
                    grad[L.q + c] += scale * y[c];
                    const double dy = scale * params[L.q + c];
                    dpre[c] = dy * (1.0 - y[c] * y[c]);
                    grad[L.bb + c] += dpre[c];
                }
                double* dh = &ws.d_htype[t][static_cast<size_t>(i) * kHeadDim];
                for (int r = 0; r < kHeadDim; ++r) {
                    const double* wbr = &params[L.wb + static_cast<size_t>(r) * kHeadDim];
                    double* dwbr = &grad[L.wb + static_cast<size_t>(r) * kHeadDim];
                    for (int c = 0; c < kHeadDim; ++c) {
                        dwbr[c] += dpre[r] * h[c];
                        dh[c] += dpre[r] * wbr[c];
                    }
                }
            }
        }
    }

    // attention stack backward, per type
    ws.d_h0.assign(static_cast<size_t>(n) * kProjectedDim, 0.0);
    std::vector<double> dg1(static_cast<size_t>(n) * kHeadDim);
    for (int t = 0; t < kTypes; ++t) {
        ws.d_concat[t].assign(static_cast<size_t>(n) * kConcatDim, 0.0);
        for (int m = 0; m < kHeads; ++m) {
            for (size_t k = 0; k < dg1.size(); ++k) dg1[k] = ws.d_htype[t][k] * (1.0 / kHeads);
            detail::attention_backward(g, t, ws.concat[t].data(), kConcatDim,
                                       &params[L.w[1][t][m]], &params[L.we[1][t][m]],
                                       &params[L.a[1][t][m]], ws.head[1][t][m], dg1.data(),
                                       &grad[L.w[1][t][m]], &grad[L.we[1][t][m]],
                                       &grad[L.a[1][t][m]], ws.d_concat[t].data(), ws);
        }
        for (int m = 0; m < kHeads; ++m) {
            // slice of the concat gradient belonging to head m
            std::vector<double>& dg0 = dg1;
            for (int i = 0; i < n; ++i) {
                const double* src = &ws.d_concat[t][static_cast<size_t>(i) * kConcatDim + m * kHeadDim];
                double* dst = &dg0[static_cast<size_t>(i) * kHeadDim];
                for (int c = 0; c < kHeadDim; ++c) dst[c] = src[c];
            }
            detail::attention_backward(g, t, ws.h0.data(), kProjectedDim, &params[L.w[0][t][m]],
                                       &params[L.we[0][t][m]], &params[L.a[0][t][m]],
                                       ws.head[0][t][m], dg0.data(), &grad[L.w[0][t][m]],
                                       &grad[L.we[0][t][m]], &grad[L.a[0][t][m]],
                                       ws.d_h0.data(), ws);
        }
    }

    // projection
    for (int i = 0; i < n; ++i) {
        const double* xi = &g.x[static_cast<size_t>(i) * kNodeInputDim];
        const double* dh = &ws.d_h0[static_cast<size_t>(i) * kProjectedDim];
        for (int r = 0; r < kProjectedDim; ++r) {
            if (dh[r] == 0.0) continue;
            double* row = &grad[L.wv + static_cast<size_t>(r) * kNodeInputDim];
            for (int c = 0; c < kNodeInputDim; ++c) row[c] += dh[r] * xi[c];
        }
    }
    return loss;
}

}  // namespace coopdrive
