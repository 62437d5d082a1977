#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "coopdrive/codec.hpp"
#include "coopdrive/core.hpp"
#include "coopdrive/episode.hpp"
#include "coopdrive/hgat.hpp"
#include "coopdrive/merge.hpp"
#include "coopdrive/rng.hpp"
#include "coopdrive/stgraph.hpp"

// Decision-instance assembly. For every decision timestep with a full
// window of history, each vehicle motion-compensates its tracked frames into
// its pose at the decision instant; collaborators push theirs through the
// V2V channel (encode, transmit, decode), the receiver rebuilds their graphs
// and merges everything into the ego frame. The ablation modes reduce the
// window to one frame and/or silence the collaborators.

namespace coopdrive {

enum class AblationMode : uint8_t {
    full = 0,   // 15-frame windows, collaborators shared
    nt_ns = 1,  // 1-frame window, ego only
    t_ns = 2,   // 15-frame windows, ego only
    nt_s = 3,   // 1-frame windows, collaborators shared
};

inline std::string to_string(AblationMode m) {
    switch (m) {
        case AblationMode::full: return "full";
        case AblationMode::nt_ns: return "NT-NS";
        case AblationMode::t_ns: return "T-NS";
        case AblationMode::nt_s: return "NT-S";
    }
    return "unknown";
}

inline AblationMode ablation_from_string(std::string_view s) {
    if (s == "full") return AblationMode::full;
    if (s == "NT-NS" || s == "nt-ns" || s == "nt_ns") return AblationMode::nt_ns;
    if (s == "T-NS" || s == "t-ns" || s == "t_ns") return AblationMode::t_ns;
    if (s == "NT-S" || s == "nt-s" || s == "nt_s") return AblationMode::nt_s;
    throw ConfigError("unknown ablation mode: " + std::string(s));
}

inline int window_length(AblationMode m) {
    return (m == AblationMode::full || m == AblationMode::t_ns) ? 15 : 1;
}

inline bool shares_observations(AblationMode m) {
    return m == AblationMode::full || m == AblationMode::nt_s;
}

struct AssembleConfig {
    AblationMode mode = AblationMode::full;
    ChannelConfig channel = ChannelConfig::dsrc();
    MergeConfig merge;
    int decision_start = 14;  // first decision step; fixed so all modes see the same instants
    GraphBuildOptions graph;
};

struct Instance {
    NetGraph net;
    Command cmd = Command::lane_follow;
    Action label = Action::go;
    int32_t node_count = 0;
    int32_t spatial_edges = 0;
    int32_t temporal_edges = 0;
    uint32_t provenance_union = 0;  // bit 0 = ego, bit k = collaborator k
};

struct DatasetStats {
    size_t instances = 0;
    size_t brake_instances = 0;
    size_t packets_sent = 0;
    size_t packets_lost = 0;
    size_t ps_total_bytes = 0;
    size_t ps_max_bytes = 0;
    double build_ms_total = 0.0;  // wall clock, excluded from deterministic reports

    double ps_mean() const {
        return packets_sent == 0 ? 0.0 : static_cast<double>(ps_total_bytes) / packets_sent;
    }
    double brake_fraction() const {
        return instances == 0 ? 0.0 : static_cast<double>(brake_instances) / instances;
    }
};

struct Dataset {
    std::vector<Instance> instances;
    DatasetStats stats;
    AblationMode mode = AblationMode::full;
};

/// Motion-compensated window for one vehicle ending at the decision step:
/// tracked sensor-frame detections re-expressed in the vehicle's pose at
/// window end, which is the anchor frame the codec ships.
inline ObservationWindow build_window(const Episode& ep, size_t vehicle_index, int32_t decision_step,
                                      int window) {
    const int32_t vid = ep.connected[vehicle_index];
    const Pose anchor = ep.pose_of(vid, decision_step);
    ObservationWindow w;
    w.vehicle_id = vid;
    w.pose = anchor;
    const int32_t first = decision_step - window + 1;
    for (int32_t step = std::max(first, 0); step <= decision_step; ++step) {
        Frame f = ep.frames[vehicle_index][static_cast<size_t>(step)];
        if (step != decision_step) {
            const Pose at = ep.pose_of(vid, step);
            for (Detection& d : f.detections) {
                d.position = anchor.to_body(at.to_world(d.position));
            }
        }
        w.frames.push_back(std::move(f));
    }
    return w;
}

/// Builds the merged decision graph for one instant; packets go through the
/// channel with one rng stream per sender.
inline MergedGraph assemble_instant(const Episode& ep, int32_t decision_step,
                                    const AssembleConfig& cfg, std::vector<RngStream>& link_rng,
                                    DatasetStats& stats) {
    const int window = window_length(cfg.mode);
    const ObservationWindow ego_window = build_window(ep, 0, decision_step, window);
    const Pose ego_pose = ego_window.pose;
    const SpatioTemporalGraph ego_graph = build_graph(ego_window.frames, cfg.graph);

    std::vector<CollaboratorGraph> collaborators;
    if (shares_observations(cfg.mode)) {
        for (size_t v = 1; v < ep.connected.size(); ++v) {
            const ObservationWindow w = build_window(ep, v, decision_step, window);
            const std::vector<uint8_t> packet = encode_window(w);
            stats.packets_sent += 1;
            stats.ps_total_bytes += packet.size();
            stats.ps_max_bytes = std::max(stats.ps_max_bytes, packet.size());
            const TransmitResult tx = transmit(packet, cfg.channel, link_rng[v]);
            if (!tx.delivered) {
                stats.packets_lost += 1;
                continue;  // the decision proceeds with whoever arrived
            }
            const ObservationWindow rx = decode_window(packet);
            collaborators.push_back(
                CollaboratorGraph{build_graph(rx.frames, cfg.graph), rx.pose, rx.vehicle_id});
        }
    }
    return merge_graphs(ego_graph, ego_pose, collaborators, cfg.merge);
}

/// Expands episodes into decision instances. The rng seeds the per-sender
/// channel streams; episodes may arrive in any order but the instance list
/// follows the input order deterministically.
inline Dataset assemble_dataset(std::span<const Episode> episodes, const AssembleConfig& cfg,
                                RngStream rng) {
    Dataset ds;
    ds.mode = cfg.mode;
    for (size_t e = 0; e < episodes.size(); ++e) {
        const Episode& ep = episodes[e];
        std::vector<RngStream> link_rng;
        for (size_t v = 0; v < ep.connected.size(); ++v) {
            link_rng.push_back(rng.substream(e * 64 + v));
        }
        for (int32_t step = cfg.decision_start; step < ep.steps(); ++step) {
            const auto t0 = std::chrono::steady_clock::now();
            const MergedGraph merged = assemble_instant(ep, step, cfg, link_rng, ds.stats);
            Instance inst;
            inst.net = to_net_graph(merged);
            inst.cmd = ep.command;
            inst.label = ep.expert_actions[static_cast<size_t>(step)];
            inst.node_count = static_cast<int32_t>(merged.graph.nodes.size());
            inst.spatial_edges = static_cast<int32_t>(merged.graph.edge_count(EdgeKind::spatial));
            inst.temporal_edges = static_cast<int32_t>(merged.graph.edge_count(EdgeKind::temporal));
            for (uint32_t p : merged.provenance) inst.provenance_union |= p;
            const auto t1 = std::chrono::steady_clock::now();
            ds.stats.build_ms_total += std::chrono::duration<double, std::milli>(t1 - t0).count();
            ds.stats.instances += 1;
            ds.stats.brake_instances += (inst.label == Action::brake) ? 1 : 0;
            ds.instances.push_back(std::move(inst));
        }
    }
    return ds;
}

}  // namespace coopdrive
