#pragma once

// Command-line front end and the pool.cfg format.
//
// pool.cfg is INI with one section per member:
//
//   [model0]
//   kind = perturbed_oracle      ; oracle | perturbed_oracle | curve_matching | external
//   model_id = 0
//   run_id = 0                   ; optional
//   checkpoint_id = 3            ; optional
//   validation_dice = 0.91       ; optional
//   boundary_jitter_px = 0.8
//   label_noise_rate = 0.005
//   shift_sensitivity = 1.2
//   prototypes = protos.csv      ; curve_matching: 3 rows of T values
//   temperature = 0.25
//   context_weight = 0.8
//   command = python3 backend.py ; external
//   timeout_s = 30

#include <filesystem>
#include <vector>

#include "daugs/segmenters.hpp"

namespace daugs::cli {

// Exit codes: 0 ok, 1 usage, 2 data error, 3 backend error.
int dispatch(int argc, char** argv);

std::vector<SegmenterSpec> read_pool_cfg(const std::filesystem::path& path);
// Curve prototypes are written next to the file as <stem>_model<id>_prototypes.csv.
void write_pool_cfg(const std::filesystem::path& path, const std::vector<SegmenterSpec>& pool);

std::array<std::vector<double>, kNumClasses> read_prototypes(const std::filesystem::path& path);
void write_prototypes(const std::filesystem::path& path, const std::array<std::vector<double>, kNumClasses>& p);

}  // namespace daugs::cli
