// Synthetic dataset presets used by the CLI `synth` subcommand and the test
// suites: Boolean sign matrices, censored positive-only observations, mixed
// real/Boolean/ordinal tables (optionally with a censored block), sparse
// outlier matrices for Huber fits, and dense Gaussian matrices.
#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "types.hpp"

namespace glrm {

struct SynthResult {
  std::shared_ptr<DataTable> observed;  // what a fit sees (may contain NAs)
  std::shared_ptr<DataTable> full;      // fully observed ground truth
};

// Presets: "boolean" (50x50 rank-10 sign matrix, fully observed), "censored"
// (300x300 rank-3, 10% of positive entries observed), "mixed" (100x100
// real/Boolean/ordinal), "missing" (mixed with a censored block), "cv" and
// "regpath" (300x300 rank-3 plus sparse outliers, entries observed uniformly
// at random), "qrpca" (30x20 dense Gaussian). obs_fraction < 0 keeps each
// preset's default.
SynthResult synth(const std::string& preset, std::uint64_t seed, double obs_fraction = -1.0);

}  // namespace glrm
