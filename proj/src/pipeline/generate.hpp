#pragma once

#include <cstdint>

#include "core/schedule.hpp"
#include "vae/model.hpp"

namespace schedsyn::pipeline {

// Draws `count` independent standard-normal latents keyed by (seed, index)
// and decodes them. Draws whose decode is degenerate are counted on the
// sample and not resampled. Deterministic for a given seed regardless of
// internal batching.
core::ScheduleSample generate(vae::VaeModel& model, uint64_t count, uint64_t seed);

}  // namespace schedsyn::pipeline
