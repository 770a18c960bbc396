#pragma once

// Per-case uncertainty-guided model selection, the fixed "established"
// choice, and checkpoint filtering of candidate pools.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/segmenters.hpp"

namespace daugs {

enum class UMetric { Upp, Utot };

std::string to_string(UMetric m);
UMetric parse_umetric(const std::string& s);

struct SelectionEntry {
  int model_id = 0;
  double u_pp = kInfiniteUncertainty;
  double u_tot = 0.0;
  std::int64_t n_myo = 0;
};

SelectionEntry selection_entry(const SegmentationSolution& s);

struct Selection {
  std::size_t chosen = 0;            // index into the input
  std::vector<std::size_t> ranking;  // input indices, best first
};

// Ranks by the chosen metric ascending, ties by model_id; entries with
// n_myo == 0 rank after every other entry under either metric.
Selection daugs_select(std::span<const SelectionEntry> entries, UMetric metric = UMetric::Upp);
Selection daugs_select(const std::vector<SegmentationSolution>& solutions, UMetric metric = UMetric::Upp);

// Columns model_id, u_pp, u_tot, n_myo, chosen.
void write_selection_csv(const std::filesystem::path& path, std::span<const SelectionEntry> entries,
                         const Selection& sel);

// Highest validation_dice, ties to the lowest model_id. Every spec must
// carry a validation score.
int established_choice(const std::vector<SegmenterSpec>& pool);

struct FilterResult {
  std::vector<SegmenterSpec> kept;  // by run id, then validation Dice descending
  std::vector<std::string> warnings;
};

// Per training run keeps up to per_run_cap candidates with
// validation_dice >= threshold, best first (ties to lower model_id).
FilterResult checkpoint_filter(const std::vector<SegmenterSpec>& candidates, double threshold = 0.87,
                               int per_run_cap = 10);

}  // namespace daugs
