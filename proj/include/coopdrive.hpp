#pragma once

// Collaborative brake/go decision making for connected vehicles:
// spatiotemporal-graph observation sharing under V2V bandwidth limits,
// heterogeneous graph attention fusion, and imitation-learned prediction,
// evaluated on synthetic accident-prone intersection scenarios.

#include "coopdrive/core.hpp"
#include "coopdrive/rng.hpp"
#include "coopdrive/bytes.hpp"
#include "coopdrive/polyline.hpp"
#include "coopdrive/sensor.hpp"
#include "coopdrive/tracker.hpp"
#include "coopdrive/expert.hpp"
#include "coopdrive/episode.hpp"
#include "coopdrive/scenario.hpp"
#include "coopdrive/episode_io.hpp"
#include "coopdrive/stgraph.hpp"
#include "coopdrive/merge.hpp"
#include "coopdrive/codec.hpp"
#include "coopdrive/hgat.hpp"
#include "coopdrive/checkpoint.hpp"
#include "coopdrive/dataset.hpp"
#include "coopdrive/train.hpp"
#include "coopdrive/pipeline.hpp"
