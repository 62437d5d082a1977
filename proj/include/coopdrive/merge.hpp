#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "coopdrive/core.hpp"
#include "coopdrive/stgraph.hpp"

// Merging of ego and collaborator graphs into the single decision graph:
// collaborator graphs are re-expressed in the ego frame from GNSS poses,
// unioned, cross-vehicle duplicates coalesced, near-ego nodes pruned, and an
// ego node inserted at the origin with spatial edges to every other node.

namespace coopdrive {

struct MergeConfig {
    double collaborator_radius = 150.0;  // meters, measured at window end
    double ego_prune_radius = 2.0;       // nodes closer than this to the origin are removed
    double coalesce_distance = 1.0;      // same-timestamp nodes closer than this merge
};

struct MergedGraph {
    SpatioTemporalGraph graph;  // node 0 is the ego node
    int32_t ego_node = -1;
    std::vector<uint32_t> provenance;      // per node: bitmask over input indices (bit 0 = ego)
    std::vector<int32_t> skipped_sources;  // collaborator vehicle ids dropped for missing pose
    int32_t out_of_range = 0;              // collaborators beyond the radius
};

/// Applies the planar rigid motion (ego_pose)^-1 * source_pose to every node
/// position. Edge attrs are untouched: rigid motions preserve distances and
/// time gaps.
inline SpatioTemporalGraph transform_graph(const SpatioTemporalGraph& g, const Pose& source_pose,
                                           const Pose& ego_pose) {
    SpatioTemporalGraph out = g;
    for (STNode& n : out.nodes) {
        n.position = ego_pose.to_body(source_pose.to_world(n.position));
    }
    return out;
}

struct CollaboratorGraph {
    SpatioTemporalGraph graph;
    std::optional<Pose> pose;  // sender pose at window end; missing -> skipped
    int32_t vehicle_id = -1;
};

/// Merges the ego graph (already expressed in the ego frame) with
/// collaborator graphs. Duplicate detections of one physical object by
/// different vehicles land within sensor noise of each other; same-timestamp
/// nodes closer than coalesce_distance collapse to their centroid with
/// provenance unioned and temporal edges re-attached. Spatial edges are
/// rebuilt from the final positions so that every attr equals the distance
/// of its endpoints.
inline MergedGraph merge_graphs(const SpatioTemporalGraph& ego_graph, const Pose& ego_pose,
                                const std::vector<CollaboratorGraph>& collaborators,
                                const MergeConfig& cfg = {}) {
    MergedGraph out;

    // Accepted inputs, ego first, collaborators in the ego frame.
    std::vector<const SpatioTemporalGraph*> inputs;
    std::vector<SpatioTemporalGraph> transformed;
    std::vector<uint32_t> input_bit;
    transformed.reserve(collaborators.size());
    inputs.push_back(&ego_graph);
    input_bit.push_back(1u);

    int32_t window_start_ds = ego_graph.window_start_ds;
    int32_t window_end_ds = ego_graph.window_end_ds;

    for (size_t k = 0; k < collaborators.size(); ++k) {
        const CollaboratorGraph& cg = collaborators[k];
        if (!cg.pose.has_value()) {
            out.skipped_sources.push_back(cg.vehicle_id);
            continue;
        }
        if (distance(cg.pose->position, ego_pose.position) > cfg.collaborator_radius) {
            ++out.out_of_range;
            continue;
        }
        transformed.push_back(transform_graph(cg.graph, *cg.pose, ego_pose));
        inputs.push_back(&transformed.back());
        input_bit.push_back(1u << (k + 1));
        if (!cg.graph.nodes.empty()) {
            window_start_ds = std::min(window_start_ds, cg.graph.window_start_ds);
            window_end_ds = std::max(window_end_ds, cg.graph.window_end_ds);
        }
    }

    // Cluster nodes per timestamp; a node joins the first cluster whose
    // centroid lies within coalesce_distance, in input order, which keeps
    // the result independent of collaborator arrival timing.
    struct Cluster {
        Vec3 sum;
        int32_t count = 0;
        int32_t t_ds = 0;
        int32_t track_id = -1;  // from the first member
        uint32_t provenance = 0;
        Vec3 centroid() const { return sum * (1.0 / count); }
    };
    std::vector<Cluster> clusters;
    std::map<int32_t, std::vector<int32_t>> clusters_by_ts;        // t_ds -> cluster indices
    std::vector<std::vector<int32_t>> node_cluster(inputs.size());  // (input, node) -> cluster

    for (size_t in = 0; in < inputs.size(); ++in) {
        const SpatioTemporalGraph& g = *inputs[in];
        node_cluster[in].assign(g.nodes.size(), -1);
        for (size_t i = 0; i < g.nodes.size(); ++i) {
            const STNode& n = g.nodes[i];
            int32_t target = -1;
            for (int32_t c : clusters_by_ts[n.t_ds]) {
                if (distance(clusters[c].centroid(), n.position) < cfg.coalesce_distance) {
                    target = c;
                    break;
                }
            }
            if (target < 0) {
                target = static_cast<int32_t>(clusters.size());
                clusters.push_back({Vec3{}, 0, n.t_ds, n.track_id, 0u});
                clusters_by_ts[n.t_ds].push_back(target);
            }
            Cluster& c = clusters[target];
            c.sum = c.sum + n.position;
            c.count += 1;
            c.provenance |= input_bit[in];
            node_cluster[in][i] = target;
        }
    }

    // Final node list: ego node first, then surviving clusters in creation
    // order. Clusters within the ego prune radius are dropped.
    SpatioTemporalGraph& g = out.graph;
    g.source_vehicle = ego_graph.source_vehicle;
    g.window_start_ds = window_start_ds;
    g.window_end_ds = window_end_ds;

    out.ego_node = 0;
    g.nodes.push_back(STNode{Vec3{0.0, 0.0, 0.0}, window_end_ds, -1, true});
    out.provenance.push_back(1u);

    std::vector<int32_t> cluster_node(clusters.size(), -1);
    for (size_t c = 0; c < clusters.size(); ++c) {
        const Vec3 pos = clusters[c].centroid();
        if (pos.norm() < cfg.ego_prune_radius) continue;
        cluster_node[c] = static_cast<int32_t>(g.nodes.size());
        g.nodes.push_back(STNode{pos, clusters[c].t_ds, clusters[c].track_id, false});
        out.provenance.push_back(clusters[c].provenance);
    }

    // Spatial edges: complete within each timestamp over non-ego nodes,
    // attrs recomputed from final positions.
    std::map<int32_t, std::vector<int32_t>> nodes_by_ts;
    for (int32_t i = 1; i < static_cast<int32_t>(g.nodes.size()); ++i) {
        nodes_by_ts[g.nodes[i].t_ds].push_back(i);
    }
    for (const auto& [ts, idx] : nodes_by_ts) {
        for (size_t a = 0; a < idx.size(); ++a) {
            for (size_t b = a + 1; b < idx.size(); ++b) {
                g.edges.push_back({idx[a], idx[b], EdgeKind::spatial,
                                   distance(g.nodes[idx[a]].position, g.nodes[idx[b]].position)});
            }
        }
    }

    // Ego node: spatial edge to every other node, attr = range from origin.
    for (int32_t i = 1; i < static_cast<int32_t>(g.nodes.size()); ++i) {
        g.edges.push_back({0, i, EdgeKind::spatial, g.nodes[i].position.norm()});
    }

    // Temporal edges re-attached through the cluster map; identical pairs
    // from different vehicles collapse to one edge.
    std::set<std::pair<int32_t, int32_t>> seen;
    for (size_t in = 0; in < inputs.size(); ++in) {
        for (const STEdge& e : inputs[in]->edges) {
            if (e.kind != EdgeKind::temporal) continue;
            int32_t s = cluster_node[node_cluster[in][e.src]];
            int32_t d = cluster_node[node_cluster[in][e.dst]];
            if (s < 0 || d < 0 || s == d) continue;
            if (!seen.insert({s, d}).second) continue;
            const double gap =
                static_cast<double>(g.nodes[d].t_ds - g.nodes[s].t_ds) * kTickSeconds;
            g.edges.push_back({s, d, EdgeKind::temporal, gap});
        }
    }

    return out;
}

}  // namespace coopdrive
