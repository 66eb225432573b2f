#ifndef LMCOMB_COMBINE_HPP
#define LMCOMB_COMBINE_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lmcomb/lattice.hpp"
#include "lmcomb/score.hpp"

namespace lmcomb::combine {

// Per-utterance n-best lists (with posteriors) of one decoding system.
struct SystemOutput {
  std::map<std::string, lat::NBestList> utts;
};

struct CombinationConfig {
  double lmwt = 8.0;
  double w_general = 0.5;       // weight of system a
  double w_conversation = 0.5;  // weight of system b

  void validate() const;  // weights in [0,1], summing to 1 (1e-9)
};

// Hypothesis-level posterior interpolation over the union of the two n-best
// lists; absent hypotheses contribute zero mass.  Ties prefer the
// lexicographically smallest word sequence.
score::Transcripts combine_systems(const SystemOutput& a, const SystemOutput& b,
                                   const CombinationConfig& cfg);

struct GridRow {
  double lmwt = 0.0;
  double w_general = 0.0;
  double w_conversation = 0.0;
  double wer_percent = 0.0;
};

struct GridResult {
  std::vector<GridRow> rows;
  size_t best = 0;  // index of the selected row
};

// Picks the minimum-WER row; ties break toward lower lmwt, then higher
// general-LM ratio.  Row order is preserved in the result.
GridResult select_best(std::vector<GridRow> rows);

using SystemProvider = std::function<const SystemOutput&(double lmwt)>;

// Evaluates every (lmwt, ratio) cell with combine_systems + pooled WER.
GridResult grid_search(const SystemProvider& a, const SystemProvider& b,
                       const score::Transcripts& refs,
                       const std::vector<double>& lmwt_set,
                       const std::vector<std::pair<double, double>>& ratio_set);

struct SweepRow {
  double lmwt = 0.0;
  double wer_percent = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  size_t best = 0;  // minimum WER; ties toward lower lmwt
};

SweepResult select_best_sweep(std::vector<SweepRow> rows);

using HypothesisProvider = std::function<score::Transcripts(double lmwt)>;

// Per-lmwt WER of a single system.
SweepResult single_system_sweep(const HypothesisProvider& system,
                                const score::Transcripts& refs,
                                const std::vector<double>& lmwt_set);

// Aligned text table mirroring the grid TSV; the selected row is marked.
std::string render_grid_table(const GridResult& grid);
std::string render_sweep_table(const SweepResult& sweep);

}  // namespace lmcomb::combine

#endif  // LMCOMB_COMBINE_HPP
