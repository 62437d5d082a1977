#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "coopdrive/rng.hpp"
#include "coopdrive/stgraph.hpp"

using namespace coopdrive;

namespace {

Frame make_frame(int32_t t_ds, std::vector<std::pair<int32_t, Vec3>> dets) {
    Frame f;
    f.vehicle_id = 0;
    f.t_ds = t_ds;
    for (auto& [id, pos] : dets) f.detections.push_back({id, pos});
    return f;
}

// canonical edge multiset keyed by (track, time) node identities
using EdgeKey = std::tuple<int32_t, int32_t, int32_t, int32_t, int, long long>;
std::multiset<EdgeKey> canonical_edges(const SpatioTemporalGraph& g) {
    std::multiset<EdgeKey> out;
    for (const STEdge& e : g.edges) {
        const STNode& a = g.nodes[static_cast<size_t>(e.src)];
        const STNode& b = g.nodes[static_cast<size_t>(e.dst)];
        auto key_a = std::make_pair(a.track_id, a.t_ds);
        auto key_b = std::make_pair(b.track_id, b.t_ds);
        if (e.kind == EdgeKind::spatial && key_b < key_a) std::swap(key_a, key_b);
        out.insert({key_a.first, key_a.second, key_b.first, key_b.second,
                    static_cast<int>(e.kind), std::llround(e.attr * 1e9)});
    }
    return out;
}

}  // namespace

TEST_CASE("two detections in one frame: 3-4-5 spatial edge") {
    const std::vector<Frame> frames{make_frame(0, {{0, {0, 0, 0}}, {1, {3, 4, 0}}})};
    const SpatioTemporalGraph g = build_graph(frames);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edge_count(EdgeKind::spatial) == 1);
    REQUIRE(g.edge_count(EdgeKind::temporal) == 0);
    REQUIRE(g.edges[0].attr == Catch::Approx(5.0));
}

TEST_CASE("one track over two frames yields one temporal edge of one tick") {
    const std::vector<Frame> frames{make_frame(1, {{7, {1, 1, 0}}}),
                                    make_frame(2, {{7, {1.5, 1, 0}}})};
    const SpatioTemporalGraph g = build_graph(frames);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edge_count(EdgeKind::temporal) == 1);
    for (const STEdge& e : g.edges) {
        if (e.kind == EdgeKind::temporal) {
            REQUIRE(e.attr == Catch::Approx(0.1));
            // directed earlier -> later
            REQUIRE(g.nodes[static_cast<size_t>(e.src)].t_ds == 1);
            REQUIRE(g.nodes[static_cast<size_t>(e.dst)].t_ds == 2);
        }
    }
}

TEST_CASE("a missed frame produces a 0.2 s temporal gap and no middle node") {
    const std::vector<Frame> frames{make_frame(1, {{7, {1, 1, 0}}}), make_frame(2, {}),
                                    make_frame(3, {{7, {2, 1, 0}}})};
    const SpatioTemporalGraph g = build_graph(frames);
    REQUIRE(g.nodes.size() == 2);
    REQUIRE(g.edge_count(EdgeKind::temporal) == 1);
    for (const STEdge& e : g.edges) {
        if (e.kind == EdgeKind::temporal) REQUIRE(e.attr == Catch::Approx(0.2));
    }
}

TEST_CASE("node and edge counts match the closed form and brute force") {
    RngStream rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int frames_n = 1 + static_cast<int>(rng.next_below(15));
        const int m = 1 + static_cast<int>(rng.next_below(6));
        std::vector<Frame> frames;
        for (int f = 0; f < frames_n; ++f) {
            Frame fr;
            fr.t_ds = f;
            for (int d = 0; d < m; ++d) {
                fr.detections.push_back(
                    {d, {rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0}});
            }
            frames.push_back(fr);
        }
        const SpatioTemporalGraph g = build_graph(frames);

        // closed form: full frames, no gaps
        REQUIRE(g.nodes.size() == static_cast<size_t>(frames_n * m));
        REQUIRE(g.edge_count(EdgeKind::spatial) == static_cast<size_t>(frames_n * m * (m - 1) / 2));
        REQUIRE(g.edge_count(EdgeKind::temporal) == static_cast<size_t>((frames_n - 1) * m));

        // brute force directly over the input frames
        size_t spatial = 0, temporal = 0;
        for (const Frame& fr : frames) {
            spatial += fr.detections.size() * (fr.detections.size() - 1) / 2;
        }
        for (int d = 0; d < m; ++d) {
            int appearances = 0;
            for (const Frame& fr : frames) {
                for (const Detection& det : fr.detections) appearances += det.track_id == d;
            }
            temporal += static_cast<size_t>(std::max(0, appearances - 1));
        }
        REQUIRE(g.edge_count(EdgeKind::spatial) == spatial);
        REQUIRE(g.edge_count(EdgeKind::temporal) == temporal);
    }
}

TEST_CASE("temporal edges form vertex-disjoint paths in consecutive mode") {
    RngStream rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Frame> frames;
        for (int f = 0; f < 10; ++f) {
            Frame fr;
            fr.t_ds = f;
            for (int d = 0; d < 4; ++d) {
                if (rng.next_u01() < 0.3) continue;
                fr.detections.push_back({d, {rng.uniform(-20, 20), rng.uniform(-20, 20), 0.0}});
            }
            frames.push_back(fr);
        }
        const SpatioTemporalGraph g = build_graph(frames);
        std::vector<int> in(g.nodes.size(), 0), out(g.nodes.size(), 0);
        for (const STEdge& e : g.edges) {
            if (e.kind != EdgeKind::temporal) continue;
            ++out[static_cast<size_t>(e.src)];
            ++in[static_cast<size_t>(e.dst)];
            REQUIRE(e.attr > 0.0);
            REQUIRE(g.nodes[static_cast<size_t>(e.src)].track_id ==
                    g.nodes[static_cast<size_t>(e.dst)].track_id);
        }
        for (size_t i = 0; i < g.nodes.size(); ++i) {
            REQUIRE(in[i] <= 1);
            REQUIRE(out[i] <= 1);
        }
    }
}

TEST_CASE("spatial attrs are translation invariant") {
    RngStream rng(29);
    std::vector<Frame> frames;
    for (int f = 0; f < 5; ++f) {
        Frame fr;
        fr.t_ds = f;
        for (int d = 0; d < 4; ++d) {
            fr.detections.push_back({d, {rng.uniform(-20, 20), rng.uniform(-20, 20), 0.0}});
        }
        frames.push_back(fr);
    }
    std::vector<Frame> shifted = frames;
    const Vec3 offset{13.7, -4.2, 0.0};
    for (Frame& fr : shifted) {
        for (Detection& d : fr.detections) d.position = d.position + offset;
    }
    const SpatioTemporalGraph a = build_graph(frames);
    const SpatioTemporalGraph b = build_graph(shifted);
    REQUIRE(a.edges.size() == b.edges.size());
    for (size_t i = 0; i < a.edges.size(); ++i) {
        REQUIRE(a.edges[i].attr == Catch::Approx(b.edges[i].attr).margin(1e-9));
    }
}

TEST_CASE("detection order does not change the graph up to relabeling") {
    RngStream rng(31);
    std::vector<Frame> frames;
    for (int f = 0; f < 6; ++f) {
        Frame fr;
        fr.t_ds = f;
        for (int d = 0; d < 5; ++d) {
            if (rng.next_u01() < 0.2) continue;
            fr.detections.push_back({d, {rng.uniform(-20, 20), rng.uniform(-20, 20), 0.0}});
        }
        frames.push_back(fr);
    }
    std::vector<Frame> shuffled = frames;
    RngStream shuffle_rng(77);
    for (Frame& fr : shuffled) shuffle_rng.shuffle(fr.detections);

    const SpatioTemporalGraph a = build_graph(frames);
    const SpatioTemporalGraph b = build_graph(shuffled);
    REQUIRE(canonical_edges(a) == canonical_edges(b));
}

TEST_CASE("empty window and bad timestamps") {
    REQUIRE(build_graph(std::vector<Frame>{}).nodes.empty());
    const std::vector<Frame> bad{make_frame(3, {}), make_frame(3, {})};
    REQUIRE_THROWS_AS(build_graph(bad), std::invalid_argument);
}

TEST_CASE("all-pairs temporal mode links every appearance pair") {
    std::vector<Frame> frames;
    for (int f = 0; f < 4; ++f) frames.push_back(make_frame(f, {{0, {1.0 * f, 0, 0}}}));
    GraphBuildOptions opts;
    opts.temporal_mode = TemporalMode::all_pairs;
    const SpatioTemporalGraph g = build_graph(frames, opts);
    REQUIRE(g.edge_count(EdgeKind::temporal) == 6);  // C(4,2)
    const SpatioTemporalGraph chain = build_graph(frames);
    REQUIRE(chain.edge_count(EdgeKind::temporal) == 3);
}
