#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "coopdrive/core.hpp"

// Greedy nearest-neighbor tracker. Detections associate to the closest live
// track within the gate (ties broken toward the lower track id); unmatched
// detections open new tracks. Tracks are never retired, so an object that
// drops out and re-appears within the gate resumes its id -- that is what
// produces temporal edges with gaps larger than one tick downstream.

namespace coopdrive {

struct TrackerConfig {
    double gate = 2.5;  // meters
};

class Tracker {
  public:
    explicit Tracker(const TrackerConfig& cfg = {}) : cfg_(cfg) {}

    /// Assigns track ids to one frame's detections; detections are returned
    /// sorted by track id, which fixes the node order downstream.
    Frame step(const Frame& frame) {
        struct Candidate {
            double dist;
            int32_t track;
            int32_t det;
        };
        std::vector<Candidate> candidates;
        for (size_t d = 0; d < frame.detections.size(); ++d) {
            for (size_t t = 0; t < tracks_.size(); ++t) {
                const double dist = distance(tracks_[t].last_position, frame.detections[d].position);
                if (dist <= cfg_.gate) {
                    candidates.push_back({dist, static_cast<int32_t>(t), static_cast<int32_t>(d)});
                }
            }
        }
        std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            if (a.track != b.track) return a.track < b.track;
            return a.det < b.det;
        });

        std::vector<int32_t> det_track(frame.detections.size(), -1);
        std::vector<char> track_used(tracks_.size(), 0);
        for (const Candidate& c : candidates) {
            if (det_track[c.det] >= 0 || track_used[c.track]) continue;
            det_track[c.det] = c.track;
            track_used[c.track] = 1;
        }

        Frame out;
        out.vehicle_id = frame.vehicle_id;
        out.t_ds = frame.t_ds;
        for (size_t d = 0; d < frame.detections.size(); ++d) {
            int32_t id = det_track[d];
            if (id < 0) {
                id = static_cast<int32_t>(tracks_.size());
                tracks_.push_back({frame.detections[d].position});
            } else {
                tracks_[id].last_position = frame.detections[d].position;
            }
            out.detections.push_back(Detection{id, frame.detections[d].position});
        }
        std::sort(out.detections.begin(), out.detections.end(),
                  [](const Detection& a, const Detection& b) { return a.track_id < b.track_id; });
        return out;
    }

  private:
    struct Track {
        Vec3 last_position;
    };
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
};

/// Tracks one vehicle's time-ordered frame sequence.
inline std::vector<Frame> track(std::span<const Frame> frames, const TrackerConfig& cfg = {}) {
    Tracker tracker(cfg);
    std::vector<Frame> out;
    out.reserve(frames.size());
    for (const Frame& f : frames) out.push_back(tracker.step(f));
    return out;
}

}  // namespace coopdrive
