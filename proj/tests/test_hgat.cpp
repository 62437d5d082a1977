#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coopdrive/checkpoint.hpp"
#include "helpers.hpp"

using namespace coopdrive;
using testutil::make_random_merged;
using testutil::reference_forward;

namespace {

MergedGraph two_node_line(double x) {
    MergedGraph mg;
    mg.ego_node = 0;
    mg.graph.nodes.push_back(STNode{{0, 0, 0}, 0, -1, true});
    mg.graph.nodes.push_back(STNode{{x, 0, 0}, 0, 0, false});
    mg.graph.edges.push_back({0, 1, EdgeKind::spatial, x});
    mg.provenance = {1u, 1u};
    return mg;
}

}  // namespace

TEST_CASE("projection is exactly Wv times the node input") {
    const ParamLayout& L = ParamLayout::get();
    std::vector<double> params(L.total(), 0.0);

    const MergedGraph mg = two_node_line(10.0);
    const NetGraph g = to_net_graph(mg, 1.0);  // unit scale: inputs are raw meters
    HgatWorkspace ws;

    SECTION("zero weights give a zero projection") {
        hgat_forward(g, Command::go_straight, params, ws);
        for (double v : ws.h0) REQUIRE(v == 0.0);
    }
    SECTION("identity-padded weights copy the input through") {
        for (int r = 0; r < kNodeInputDim; ++r) params[L.wv + r * kNodeInputDim + r] = 1.0;
        hgat_forward(g, Command::go_straight, params, ws);
        // node 1 input is (10, 0, 0, 0)
        REQUIRE(ws.h0[kProjectedDim + 0] == Catch::Approx(10.0));
        REQUIRE(ws.h0[kProjectedDim + 1] == 0.0);
        REQUIRE(ws.h0[kProjectedDim + 3] == 0.0);
        // ego node input is (0, 0, 0, 1)
        REQUIRE(ws.h0[3] == Catch::Approx(1.0));
    }
    SECTION("random weights match a plain matvec") {
        RngStream rng(3);
        for (size_t i = 0; i < 48; ++i) params[L.wv + i] = rng.uniform(-1, 1);
        hgat_forward(g, Command::go_straight, params, ws);
        for (int i = 0; i < g.n; ++i) {
            for (int r = 0; r < kProjectedDim; ++r) {
                double acc = 0.0;
                for (int c = 0; c < kNodeInputDim; ++c) {
                    acc += params[L.wv + r * kNodeInputDim + c] * g.x[i * kNodeInputDim + c];
                }
                REQUIRE(ws.h0[i * kProjectedDim + r] == Catch::Approx(acc).margin(1e-12));
            }
        }
    }
}

TEST_CASE("a single neighbor takes all the attention") {
    const MergedGraph mg = two_node_line(12.0);
    const NetGraph g = to_net_graph(mg);
    const std::vector<double> params = init_params(5);
    HgatWorkspace ws;
    hgat_forward(g, Command::go_straight, params, ws);
    for (int l = 0; l < kLayers; ++l) {
        for (int m = 0; m < kHeads; ++m) {
            for (double a : ws.head[l][0][m].alpha) REQUIRE(a == Catch::Approx(1.0));
        }
    }
}

TEST_CASE("two interchangeable neighbors split the attention evenly") {
    MergedGraph mg;
    mg.ego_node = 0;
    mg.graph.nodes.push_back(STNode{{0, 0, 0}, 0, -1, true});
    mg.graph.nodes.push_back(STNode{{8, 6, 0}, 0, 0, false});
    mg.graph.nodes.push_back(STNode{{8, -6, 0}, 0, 1, false});
    // mirror-symmetric pair: same range to ego, same pair distance attrs
    mg.graph.edges.push_back({0, 1, EdgeKind::spatial, 10.0});
    mg.graph.edges.push_back({0, 2, EdgeKind::spatial, 10.0});
    mg.provenance = {1u, 1u, 1u};
    const NetGraph g = to_net_graph(mg);

    // weights that cannot distinguish the two neighbors: zero out the y column
    const ParamLayout& L = ParamLayout::get();
    std::vector<double> params = init_params(11);
    for (int r = 0; r < kProjectedDim; ++r) params[L.wv + r * kNodeInputDim + 1] = 0.0;

    HgatWorkspace ws;
    hgat_forward(g, Command::go_straight, params, ws);
    for (int m = 0; m < kHeads; ++m) {
        const auto& hs = ws.head[0][0][m];
        // ego node's incidence slice comes first (node 0)
        REQUIRE(hs.alpha.size() >= 2);
        const int lo = g.adj[0].offsets[0];
        REQUIRE(g.adj[0].offsets[1] - lo == 2);
        REQUIRE(hs.alpha[lo] == Catch::Approx(0.5));
        REQUIRE(hs.alpha[lo + 1] == Catch::Approx(0.5));
    }
}

TEST_CASE("forward matches the long-double reference on random graphs") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        const MergedGraph mg = make_random_merged(seed + 100);
        const NetGraph g = to_net_graph(mg);
        const std::vector<double> params = init_params(seed * 3 + 1);
        HgatWorkspace ws;
        const Prediction got = hgat_forward(g, Command::turn_left, params, ws);
        const testutil::RefResult want = reference_forward(g, Command::turn_left, params);
        REQUIRE(got.p_brake == Catch::Approx((double)want.p[0]).margin(1e-10));
        REQUIRE(got.p_go == Catch::Approx((double)want.p[1]).margin(1e-10));
        REQUIRE(got.beta_spat == Catch::Approx((double)want.beta[0]).margin(1e-10));
        REQUIRE(got.beta_temp == Catch::Approx((double)want.beta[1]).margin(1e-10));
        for (int t = 0; t < 2; ++t) {
            for (int i = 0; i < g.n; ++i) {
                for (int c = 0; c < kHeadDim; ++c) {
                    REQUIRE(ws.htype[t][i * kHeadDim + c] ==
                            Catch::Approx((double)want.htype[t][i][c]).margin(1e-9));
                }
            }
        }
    }
}

TEST_CASE("normalization invariants hold on every forward") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const MergedGraph mg = make_random_merged(seed + 400, 4, 4);
        const NetGraph g = to_net_graph(mg);
        const std::vector<double> params = init_params(seed + 4);
        HgatWorkspace ws;
        const Prediction p = hgat_forward(g, Command::change_left, params, ws);

        REQUIRE(p.p_brake + p.p_go == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(p.beta_spat + p.beta_temp == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(p.beta_spat >= 0.0);
        REQUIRE(p.beta_temp >= 0.0);
        for (int l = 0; l < kLayers; ++l) {
            for (int t = 0; t < kTypes; ++t) {
                for (int m = 0; m < kHeads; ++m) {
                    const auto& adj = g.adj[t];
                    for (int i = 0; i < g.n; ++i) {
                        const int lo = adj.offsets[i], hi = adj.offsets[i + 1];
                        if (hi == lo) continue;
                        double sum = 0.0;
                        for (int k = lo; k < hi; ++k) sum += ws.head[l][t][m].alpha[k];
                        REQUIRE(sum == Catch::Approx(1.0).margin(1e-6));
                    }
                }
            }
        }
    }
}

TEST_CASE("relabeling the nodes leaves the prediction unchanged") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const MergedGraph mg = make_random_merged(seed + 900, 4, 4);
        const NetGraph g = to_net_graph(mg);
        const std::vector<double> params = init_params(seed + 17);
        HgatWorkspace ws;
        const Prediction base = hgat_forward(g, Command::go_straight, params, ws);

        // permute node ids
        RngStream rng(seed + 1);
        std::vector<int32_t> perm(g.n);
        for (int i = 0; i < g.n; ++i) perm[i] = i;
        rng.shuffle(perm);
        MergedGraph shuffled;
        shuffled.graph.nodes.resize(mg.graph.nodes.size());
        shuffled.provenance.resize(mg.graph.nodes.size());
        for (size_t i = 0; i < mg.graph.nodes.size(); ++i) {
            shuffled.graph.nodes[static_cast<size_t>(perm[i])] = mg.graph.nodes[i];
            shuffled.provenance[static_cast<size_t>(perm[i])] = mg.provenance[i];
        }
        for (const STEdge& e : mg.graph.edges) {
            shuffled.graph.edges.push_back(
                {perm[static_cast<size_t>(e.src)], perm[static_cast<size_t>(e.dst)], e.kind, e.attr});
        }
        shuffled.ego_node = perm[static_cast<size_t>(mg.ego_node)];
        const NetGraph g2 = to_net_graph(shuffled);
        const Prediction moved = hgat_forward(g2, Command::go_straight, params, ws);
        REQUIRE(moved.p_brake == Catch::Approx(base.p_brake).margin(1e-6));
        REQUIRE(moved.p_go == Catch::Approx(base.p_go).margin(1e-6));
    }
}

TEST_CASE("deleting all temporal edges equals the spatial-only computation") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        MergedGraph mg = make_random_merged(seed + 50, 4, 4);
        MergedGraph spat_only = mg;
        spat_only.graph.edges.clear();
        for (const STEdge& e : mg.graph.edges) {
            if (e.kind == EdgeKind::spatial) spat_only.graph.edges.push_back(e);
        }
        const NetGraph g = to_net_graph(spat_only);
        const std::vector<double> params = init_params(seed);
        HgatWorkspace ws;
        const Prediction p = hgat_forward(g, Command::lane_follow, params, ws);
        REQUIRE(p.beta_temp == 0.0);
        REQUIRE(p.beta_spat == 1.0);
        const testutil::RefResult want = reference_forward(g, Command::lane_follow, params);
        REQUIRE(p.p_brake == Catch::Approx((double)want.p[0]).margin(1e-10));
    }
}

TEST_CASE("zero parameters predict a tie, resolved to brake") {
    const MergedGraph mg = two_node_line(9.0);
    const NetGraph g = to_net_graph(mg);
    std::vector<double> params(ParamLayout::get().total(), 0.0);
    HgatWorkspace ws;
    const Prediction p = hgat_forward(g, Command::go_straight, params, ws);
    REQUIRE(p.p_brake == Catch::Approx(0.5));
    REQUIRE(p.p_go == Catch::Approx(0.5));
    REQUIRE(p.action == Action::brake);
}

TEST_CASE("hand-set logits produce the softmax arithmetic") {
    const ParamLayout& L = ParamLayout::get();
    const MergedGraph mg = two_node_line(9.0);
    const NetGraph g = to_net_graph(mg);
    std::vector<double> params(L.total(), 0.0);
    params[L.mlp_b3 + 0] = 10.0;
    params[L.mlp_b3 + 1] = -10.0;
    HgatWorkspace ws;
    const Prediction p = hgat_forward(g, Command::go_straight, params, ws);
    REQUIRE(p.p_brake == Catch::Approx(1.0 / (1.0 + std::exp(-20.0))).epsilon(1e-12));
    REQUIRE(p.p_go == Catch::Approx(std::exp(-20.0) / (1.0 + std::exp(-20.0))).epsilon(1e-9));
    REQUIRE(p.action == Action::brake);
}

TEST_CASE("an ego-only graph still yields a well-formed prediction") {
    MergedGraph mg;
    mg.ego_node = 0;
    mg.graph.nodes.push_back(STNode{{0, 0, 0}, 0, -1, true});
    mg.provenance = {1u};
    const NetGraph g = to_net_graph(mg);
    const std::vector<double> params = init_params(2);
    HgatWorkspace ws;
    const Prediction p = hgat_forward(g, Command::lane_follow, params, ws);
    REQUIRE(std::isfinite(p.p_brake));
    REQUIRE(p.p_brake + p.p_go == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(p.beta_spat == 1.0);
}

TEST_CASE("loss is -log p of the labeled class") {
    const MergedGraph mg = make_random_merged(77);
    const NetGraph g = to_net_graph(mg);
    const std::vector<double> params = init_params(7);
    HgatWorkspace ws;
    const Prediction p = hgat_forward(g, Command::go_straight, params, ws);
    std::vector<double> grad(ParamLayout::get().total(), 0.0);
    const double loss_brake =
        hgat_loss_grad(g, Command::go_straight, Action::brake, 1.0, params, grad, ws);
    REQUIRE(loss_brake == Catch::Approx(-std::log(p.p_brake)).margin(1e-12));
    const double loss_go =
        hgat_loss_grad(g, Command::go_straight, Action::go, 1.0, params, grad, ws);
    REQUIRE(loss_go == Catch::Approx(-std::log(p.p_go)).margin(1e-12));
}

TEST_CASE("uniform prediction costs ln 2") {
    const MergedGraph mg = two_node_line(9.0);
    const NetGraph g = to_net_graph(mg);
    std::vector<double> params(ParamLayout::get().total(), 0.0);
    std::vector<double> grad(ParamLayout::get().total(), 0.0);
    HgatWorkspace ws;
    const double loss = hgat_loss_grad(g, Command::go_straight, Action::go, 1.0, params, grad, ws);
    REQUIRE(loss == Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("checkpoints round trip and reject mismatches") {
    const std::vector<double> params = init_params(9);
    const std::vector<uint8_t> bytes = serialize_params(params);
    const std::vector<double> rt = deserialize_params(bytes);
    REQUIRE(rt == params);

    std::vector<uint8_t> corrupt = bytes;
    corrupt[6] ^= 0xFF;  // arch hash
    REQUIRE_THROWS_AS(deserialize_params(corrupt), ConfigError);
}
