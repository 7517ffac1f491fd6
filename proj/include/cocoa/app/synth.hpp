#pragma once

#include <vector>

#include "cocoa/app/config.hpp"
#include "cocoa/record.hpp"

namespace cocoa::app {

// Deterministic synthetic records with a planted consistency signal.
//
// Each record has an answer text; every sample repeats it with a per-record
// agreement probability (driven by `overlap`) and is otherwise a distinct
// random text. Identical texts share identical token log-probabilities. For
// each target strategy the quality is
//     rho * (share of samples equal to the target) + (1 - rho) * noise,
// so rho controls how strongly consistency predicts quality. Log-probability
// regimes (confident / diffuse) are independent of quality.
std::vector<GenerationRecord> synthesize(const SynthParams& params);

} // namespace cocoa::app
