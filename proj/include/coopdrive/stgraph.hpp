#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "coopdrive/core.hpp"

// Spatiotemporal graph built from one vehicle's tracked observation window.
// Nodes are detected object positions; spatial edges connect detections of
// the same frame (attr = Euclidean distance), temporal edges connect
// consecutive appearances of one track (attr = time gap in seconds, directed
// earlier -> later). "No relation" is represented by edge absence, never by
// a zero-attr edge, so neighborhood sums downstream only see real relations.

namespace coopdrive {

enum class EdgeKind : uint8_t { spatial = 0, temporal = 1 };

struct STNode {
    Vec3 position;
    int32_t t_ds = 0;      // deciseconds
    int32_t track_id = -1;
    bool is_ego = false;

    double timestamp() const { return static_cast<double>(t_ds) * kTickSeconds; }
};

struct STEdge {
    int32_t src = 0;  // node index
    int32_t dst = 0;
    EdgeKind kind = EdgeKind::spatial;
    double attr = 0.0;  // meters (spatial) or seconds (temporal)
};

struct SpatioTemporalGraph {
    std::vector<STNode> nodes;
    std::vector<STEdge> edges;  // spatial edges stored once with src < dst, undirected
    int32_t source_vehicle = -1;
    int32_t window_start_ds = 0;
    int32_t window_end_ds = 0;

    size_t node_count() const { return nodes.size(); }
    size_t edge_count(EdgeKind k) const {
        size_t n = 0;
        for (const auto& e : edges) n += (e.kind == k) ? 1 : 0;
        return n;
    }
};

enum class TemporalMode : uint8_t {
    consecutive = 0,  // chain linking each track's consecutive appearances
    all_pairs = 1,    // every ordered appearance pair of a track
};

struct GraphBuildOptions {
    TemporalMode temporal_mode = TemporalMode::consecutive;
};

/// Builds the graph for one tracked window. Frames must be time-ordered and
/// come from a single vehicle; an empty window yields an empty graph.
inline SpatioTemporalGraph build_graph(std::span<const Frame> frames,
                                       const GraphBuildOptions& opts = {}) {
    SpatioTemporalGraph g;
    if (frames.empty()) return g;

    g.source_vehicle = frames.front().vehicle_id;
    g.window_start_ds = frames.front().t_ds;
    g.window_end_ds = frames.back().t_ds;

    for (size_t f = 1; f < frames.size(); ++f) {
        if (frames[f].t_ds <= frames[f - 1].t_ds) {
            throw std::invalid_argument("build_graph: frame timestamps must be strictly increasing");
        }
    }

    // Nodes, frame by frame; track ids make each (track, timestamp) unique.
    std::vector<std::pair<int32_t, int32_t>> frame_span;  // [first, last) node index per frame
    for (const Frame& fr : frames) {
        int32_t first = static_cast<int32_t>(g.nodes.size());
        for (const Detection& d : fr.detections) {
            g.nodes.push_back(STNode{d.position, fr.t_ds, d.track_id, false});
        }
        frame_span.emplace_back(first, static_cast<int32_t>(g.nodes.size()));
    }

    // Spatial: complete graph within each frame.
    for (auto [first, last] : frame_span) {
        for (int32_t p = first; p < last; ++p) {
            for (int32_t q = p + 1; q < last; ++q) {
                g.edges.push_back(
                    {p, q, EdgeKind::spatial, distance(g.nodes[p].position, g.nodes[q].position)});
            }
        }
    }

    // Temporal: appearances of each track in time order.
    std::map<int32_t, std::vector<int32_t>> track_nodes;
    for (int32_t i = 0; i < static_cast<int32_t>(g.nodes.size()); ++i) {
        if (g.nodes[i].track_id >= 0) track_nodes[g.nodes[i].track_id].push_back(i);
    }
    for (const auto& [track, idx] : track_nodes) {
        if (opts.temporal_mode == TemporalMode::consecutive) {
            for (size_t k = 1; k < idx.size(); ++k) {
                const double gap =
                    static_cast<double>(g.nodes[idx[k]].t_ds - g.nodes[idx[k - 1]].t_ds) *
                    kTickSeconds;
                g.edges.push_back({idx[k - 1], idx[k], EdgeKind::temporal, gap});
            }
        } else {
            for (size_t a = 0; a < idx.size(); ++a) {
                for (size_t b = a + 1; b < idx.size(); ++b) {
                    const double gap =
                        static_cast<double>(g.nodes[idx[b]].t_ds - g.nodes[idx[a]].t_ds) *
                        kTickSeconds;
                    g.edges.push_back({idx[a], idx[b], EdgeKind::temporal, gap});
                }
            }
        }
    }
    return g;
}

}  // namespace coopdrive
