#pragma once

#include <filesystem>

#include "heterofisher/classifier.hpp"

namespace heterofisher {

/// Binary model document, magic "HFSH1". Stores config, seeds, priors,
/// metadata and the per-node records (centers, bandwidths, robust stats,
/// divergences, rankings, shift plan). The projection matrix is regenerated
/// from its seed on load. Round-trips bit-identically.
void save_model(const TrainedModel& model, const std::filesystem::path& path);

TrainedModel load_model(const std::filesystem::path& path);

}  // namespace heterofisher
