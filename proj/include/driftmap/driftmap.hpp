#pragma once

/// @file driftmap.hpp
/// @brief Umbrella header.

#include "driftmap/core.hpp"
#include "driftmap/density_band.hpp"
#include "driftmap/drift_detector.hpp"
#include "driftmap/classifier.hpp"
#include "driftmap/model.hpp"
#include "driftmap/memory_manager.hpp"
#include "driftmap/kd_tree.hpp"
#include "driftmap/weak_supervision.hpp"
#include "driftmap/ensemble.hpp"
#include "driftmap/stream_gen.hpp"
#include "driftmap/io.hpp"
#include "driftmap/config.hpp"
#include "driftmap/pipeline.hpp"
#include "driftmap/report.hpp"
