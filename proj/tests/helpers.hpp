#pragma once

// Shared test utilities: deterministic random decision graphs and an
// independent long-double reference implementation of the attention network.
// The reference is written straight from the layer definitions with plain
// nested loops and must stay independent of the production code paths it
// checks.

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "coopdrive/hgat.hpp"
#include "coopdrive/merge.hpp"
#include "coopdrive/rng.hpp"
#include "coopdrive/stgraph.hpp"

namespace testutil {

using namespace coopdrive;

/// Random merged-style decision graph: an ego node at the origin plus tracked
/// detections over a few frames, complete spatial edges per frame, ego edges
/// to all nodes, consecutive temporal edges per track.
inline MergedGraph make_random_merged(uint64_t seed, int max_tracks = 3, int max_frames = 3,
                                      double span_m = 40.0) {
    RngStream rng(splitmix64(seed));
    const int tracks = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_tracks)));
    const int frames = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_frames)));

    MergedGraph mg;
    SpatioTemporalGraph& g = mg.graph;
    g.window_start_ds = 0;
    g.window_end_ds = frames - 1;
    mg.ego_node = 0;
    g.nodes.push_back(STNode{{0.0, 0.0, 0.0}, frames - 1, -1, true});
    mg.provenance.push_back(1u);

    std::map<int, std::vector<int>> track_nodes;
    for (int f = 0; f < frames; ++f) {
        for (int tr = 0; tr < tracks; ++tr) {
            if (rng.next_u01() < 0.25) continue;  // dropouts create temporal gaps
            Vec3 pos{rng.uniform(-span_m, span_m), rng.uniform(-span_m, span_m), 0.0};
            if (pos.norm() < 2.5) pos.x += 5.0;
            g.nodes.push_back(STNode{pos, f, tr, false});
            track_nodes[tr].push_back(static_cast<int>(g.nodes.size()) - 1);
            mg.provenance.push_back(1u);
        }
    }
    // spatial: complete per frame + ego to everything
    for (int f = 0; f < frames; ++f) {
        std::vector<int> at;
        for (size_t i = 1; i < g.nodes.size(); ++i) {
            if (g.nodes[i].t_ds == f) at.push_back(static_cast<int>(i));
        }
        for (size_t a = 0; a < at.size(); ++a) {
            for (size_t b = a + 1; b < at.size(); ++b) {
                g.edges.push_back({at[a], at[b], EdgeKind::spatial,
                                   distance(g.nodes[at[a]].position, g.nodes[at[b]].position)});
            }
        }
    }
    for (size_t i = 1; i < g.nodes.size(); ++i) {
        g.edges.push_back({0, static_cast<int32_t>(i), EdgeKind::spatial, g.nodes[i].position.norm()});
    }
    for (const auto& [tr, idx] : track_nodes) {
        for (size_t k = 1; k < idx.size(); ++k) {
            const double gap = (g.nodes[idx[k]].t_ds - g.nodes[idx[k - 1]].t_ds) * kTickSeconds;
            g.edges.push_back({idx[k - 1], idx[k], EdgeKind::temporal, gap});
        }
    }
    return mg;
}

// ---------------------------------------------------------------------------
// Long-double reference forward pass.

struct RefResult {
    long double p[2];
    long double beta[2];
    std::vector<std::array<long double, 6>> htype[2];
    long double loss(int label_index) const { return -std::log(p[label_index]); }
};

inline RefResult reference_forward(const NetGraph& g, Command cmd,
                                   const std::vector<double>& params) {
    const ParamLayout& L = ParamLayout::get();
    const int n = g.n;
    auto relu = [](long double v) { return v > 0.0L ? v : 0.0L; };

    // projection
    std::vector<std::array<long double, 12>> h0(n);
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < 12; ++r) {
            long double acc = 0.0L;
            for (int c = 0; c < 4; ++c) acc += (long double)params[L.wv + r * 4 + c] * g.x[i * 4 + c];
            h0[i][r] = acc;
        }
    }

    RefResult out;
    for (int t = 0; t < 2; ++t) {
        // layer 0: 12 -> 6 per head, concatenated
        std::vector<std::vector<long double>> feat(n, std::vector<long double>(12));
        for (int i = 0; i < n; ++i) {
            for (int c = 0; c < 12; ++c) feat[i][c] = h0[i][c];
        }
        std::vector<std::vector<long double>> next(n);
        for (int layer = 0; layer < 2; ++layer) {
            const int din = layer == 0 ? 12 : 24;
            std::vector<std::vector<std::array<long double, 6>>> head_out(
                4, std::vector<std::array<long double, 6>>(n));
            for (int m = 0; m < 4; ++m) {
                const double* W = &params[L.w[layer][t][m]];
                const double* We = &params[L.we[layer][t][m]];
                const double* a = &params[L.a[layer][t][m]];
                for (int i = 0; i < n; ++i) {
                    // u vectors
                    auto uvec = [&](int node) {
                        std::array<long double, 6> u{};
                        for (int r = 0; r < 6; ++r) {
                            long double acc = 0.0L;
                            for (int c = 0; c < din; ++c) {
                                acc += (long double)W[r * din + c] * feat[node][c];
                            }
                            u[r] = acc;
                        }
                        return u;
                    };
                    const auto ui = uvec(i);
                    // neighbors of i in this type
                    const auto& adj = g.adj[t];
                    std::vector<int> nbr;
                    std::vector<long double> attr;
                    for (int k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k) {
                        nbr.push_back(adj.neighbor[k]);
                        attr.push_back(adj.attr[k]);
                    }
                    std::array<long double, 6> agg{};
                    for (int r = 0; r < 6; ++r) agg[r] = ui[r];
                    if (!nbr.empty()) {
                        std::vector<long double> score(nbr.size());
                        for (size_t k = 0; k < nbr.size(); ++k) {
                            const auto uj = uvec(nbr[k]);
                            long double z = 0.0L;
                            for (int c = 0; c < 6; ++c) z += (long double)a[c] * ui[c];
                            for (int c = 0; c < 6; ++c) z += (long double)a[6 + c] * uj[c];
                            for (int c = 0; c < 6; ++c) {
                                z += (long double)a[12 + c] * ((long double)We[c] * attr[k]);
                            }
                            score[k] = relu(z);
                        }
                        long double mx = score[0];
                        for (long double s : score) mx = std::max(mx, s);
                        long double denom = 0.0L;
                        std::vector<long double> alpha(nbr.size());
                        for (size_t k = 0; k < nbr.size(); ++k) {
                            alpha[k] = std::exp(score[k] - mx);
                            denom += alpha[k];
                        }
                        for (size_t k = 0; k < nbr.size(); ++k) {
                            alpha[k] /= denom;
                            const auto uj = uvec(nbr[k]);
                            for (int r = 0; r < 6; ++r) {
                                agg[r] += alpha[k] * (uj[r] + (long double)We[r] * attr[k]);
                            }
                        }
                    }
                    for (int r = 0; r < 6; ++r) head_out[m][i][r] = relu(agg[r]);
                }
            }
            if (layer == 0) {
                for (int i = 0; i < n; ++i) {
                    feat[i].assign(24, 0.0L);
                    for (int m = 0; m < 4; ++m) {
                        for (int r = 0; r < 6; ++r) feat[i][m * 6 + r] = head_out[m][i][r];
                    }
                }
            } else {
                next.assign(n, std::vector<long double>(6, 0.0L));
                for (int i = 0; i < n; ++i) {
                    for (int m = 0; m < 4; ++m) {
                        for (int r = 0; r < 6; ++r) next[i][r] += head_out[m][i][r] / 4.0L;
                    }
                }
            }
        }
        out.htype[t].assign(n, {});
        for (int i = 0; i < n; ++i) {
            for (int r = 0; r < 6; ++r) out.htype[t][i][r] = next[i][r];
        }
    }

    // type importance
    long double braw[2] = {0.0L, 0.0L};
    bool present[2];
    for (int t = 0; t < 2; ++t) {
        int count = 0;
        long double acc = 0.0L;
        for (int i = 0; i < n; ++i) {
            if (g.adj[t].offsets[i + 1] == g.adj[t].offsets[i]) continue;
            ++count;
            for (int r = 0; r < 6; ++r) {
                long double pre = (long double)params[L.bb + r];
                for (int c = 0; c < 6; ++c) {
                    pre += (long double)params[L.wb + r * 6 + c] * out.htype[t][i][c];
                }
                acc += (long double)params[L.q + r] * std::tanh(pre);
            }
        }
        present[t] = count > 0;
        if (count > 0) braw[t] = acc / count;
    }
    if (present[0] && present[1]) {
        const long double e0 = std::exp(braw[0]);
        const long double e1 = std::exp(braw[1]);
        out.beta[0] = e0 / (e0 + e1);
        out.beta[1] = e1 / (e0 + e1);
    } else if (present[1]) {
        out.beta[0] = 0.0L;
        out.beta[1] = 1.0L;
    } else {
        out.beta[0] = 1.0L;
        out.beta[1] = 0.0L;
    }

    std::array<long double, 12> mlp_in{};
    for (int r = 0; r < 6; ++r) {
        mlp_in[r] = out.beta[0] * out.htype[0][g.ego][r] + out.beta[1] * out.htype[1][g.ego][r];
    }
    mlp_in[6 + static_cast<int>(cmd)] = 1.0L;

    auto dense = [&](size_t w, size_t b, int rows, int cols, const long double* in,
                     long double* o) {
        for (int r = 0; r < rows; ++r) {
            long double acc = (long double)params[b + r];
            for (int c = 0; c < cols; ++c) acc += (long double)params[w + r * cols + c] * in[c];
            o[r] = acc;
        }
    };
    long double z1[32], z2[32], z3[2];
    dense(L.mlp_w1, L.mlp_b1, 32, 12, mlp_in.data(), z1);
    for (auto& v : z1) v = relu(v);
    dense(L.mlp_w2, L.mlp_b2, 32, 32, z1, z2);
    for (auto& v : z2) v = relu(v);
    dense(L.mlp_w3, L.mlp_b3, 2, 32, z2, z3);
    const long double mx = std::max(z3[0], z3[1]);
    const long double e0 = std::exp(z3[0] - mx);
    const long double e1 = std::exp(z3[1] - mx);
    out.p[0] = e0 / (e0 + e1);
    out.p[1] = e1 / (e0 + e1);
    return out;
}

}  // namespace testutil
