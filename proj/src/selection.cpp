#include "daugs/selection.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "daugs/report.hpp"

namespace daugs {

std::string to_string(UMetric m) { return m == UMetric::Upp ? "upp" : "utot"; }

UMetric parse_umetric(const std::string& s) {
  if (s == "upp") return UMetric::Upp;
  if (s == "utot") return UMetric::Utot;
  throw DataError("unknown uncertainty metric: " + s);
}

SelectionEntry selection_entry(const SegmentationSolution& s) {
  return {s.model_id, s.umap.u_pp, s.umap.u_tot, s.umap.n_myo};
}

Selection daugs_select(std::span<const SelectionEntry> entries, UMetric metric) {
  if (entries.empty()) throw DataError("daugs_select: no solutions");
  auto key = [&](const SelectionEntry& e) {
    if (e.n_myo <= 0) return kInfiniteUncertainty;
    return metric == UMetric::Upp ? e.u_pp : e.u_tot;
  };
  Selection sel;
  sel.ranking.resize(entries.size());
  std::iota(sel.ranking.begin(), sel.ranking.end(), 0);
  std::sort(sel.ranking.begin(), sel.ranking.end(), [&](std::size_t a, std::size_t b) {
    const double ka = key(entries[a]), kb = key(entries[b]);
    if (ka != kb) return ka < kb;
    return entries[a].model_id < entries[b].model_id;
  });
  sel.chosen = sel.ranking.front();
  return sel;
}

Selection daugs_select(const std::vector<SegmentationSolution>& solutions, UMetric metric) {
  std::vector<SelectionEntry> entries;
  entries.reserve(solutions.size());
  for (const auto& s : solutions) entries.push_back(selection_entry(s));
  return daugs_select(entries, metric);
}

void write_selection_csv(const std::filesystem::path& path, std::span<const SelectionEntry> entries,
                         const Selection& sel) {
  Csv csv;
  csv.header = {"model_id", "u_pp", "u_tot", "n_myo", "chosen"};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const SelectionEntry& e = entries[i];
    csv.add({fmt(e.model_id), fmt(e.u_pp), fmt(e.u_tot), fmt(e.n_myo), fmt(i == sel.chosen)});
  }
  csv.write(path);
}

int established_choice(const std::vector<SegmenterSpec>& pool) {
  if (pool.empty()) throw DataError("established selection: empty pool");
  const SegmenterSpec* best = nullptr;
  for (const auto& s : pool) {
    if (!s.validation_dice) throw DataError("established selection: model without validation Dice");
    if (!best || *s.validation_dice > *best->validation_dice ||
        (*s.validation_dice == *best->validation_dice && s.model_id < best->model_id))
      best = &s;
  }
  return best->model_id;
}

FilterResult checkpoint_filter(const std::vector<SegmenterSpec>& candidates, double threshold, int per_run_cap) {
  std::map<int, std::vector<const SegmenterSpec*>> runs;
  for (const auto& c : candidates) {
    if (!c.validation_dice) throw DataError("checkpoint_filter: candidate without validation Dice");
    runs[c.run_id].push_back(&c);
  }
  FilterResult out;
  for (auto& [run, members] : runs) {
    std::sort(members.begin(), members.end(), [](const SegmenterSpec* a, const SegmenterSpec* b) {
      if (*a->validation_dice != *b->validation_dice) return *a->validation_dice > *b->validation_dice;
      return a->model_id < b->model_id;
    });
    int kept = 0;
    for (const SegmenterSpec* m : members) {
      if (kept >= per_run_cap || *m->validation_dice < threshold) continue;
      out.kept.push_back(*m);
      ++kept;
    }
    if (kept == 0)
      out.warnings.push_back("run " + std::to_string(run) + ": no candidate reaches validation Dice " +
                             fmt(threshold));
  }
  return out;
}

}  // namespace daugs
