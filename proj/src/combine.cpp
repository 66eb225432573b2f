#include "lmcomb/combine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lmcomb/util.hpp"

namespace lmcomb::combine {

void CombinationConfig::validate() const {
  if (lmwt <= 0.0) throw Error("CombinationConfig: lmwt must be positive");
  if (w_general < 0.0 || w_general > 1.0 || w_conversation < 0.0 || w_conversation > 1.0)
    throw Error("CombinationConfig: ratios must lie in [0,1]");
  if (std::abs(w_general + w_conversation - 1.0) > 1e-9)
    throw Error("CombinationConfig: ratios must sum to 1");
}

score::Transcripts combine_systems(const SystemOutput& a, const SystemOutput& b,
                                   const CombinationConfig& cfg) {
  cfg.validate();
  std::vector<std::string> only_a, only_b;
  for (const auto& [id, nb] : a.utts)
    if (!b.utts.count(id)) only_a.push_back(id);
  for (const auto& [id, nb] : b.utts)
    if (!a.utts.count(id)) only_b.push_back(id);
  if (!only_a.empty() || !only_b.empty())
    throw Error("combine_systems: utterance id mismatch; only in system a: [" +
                join(only_a, " ") + "] only in system b: [" + join(only_b, " ") + "]");

  score::Transcripts out;
  for (const auto& [id, nb_a] : a.utts) {
    const auto& nb_b = b.utts.at(id);
    // Union of hypothesis word sequences with interpolated posterior mass.
    std::map<std::vector<std::string>, double> scores;
    for (const auto& h : nb_a.hyps) scores[h.words] += cfg.w_general * h.posterior;
    for (const auto& h : nb_b.hyps) scores[h.words] += cfg.w_conversation * h.posterior;
    if (scores.empty()) throw Error("combine_systems: empty n-best for " + id);
    const std::vector<std::string>* best_words = nullptr;
    double best_score = -1.0;
    for (const auto& [words, s] : scores) {
      if (s > best_score) {  // map order breaks ties lexicographically
        best_score = s;
        best_words = &words;
      }
    }
    out.emplace(id, *best_words);
  }
  return out;
}

GridResult select_best(std::vector<GridRow> rows) {
  if (rows.empty()) throw Error("select_best: empty grid");
  GridResult result;
  result.rows = std::move(rows);
  size_t best = 0;
  for (size_t i = 1; i < result.rows.size(); ++i) {
    const auto& cand = result.rows[i];
    const auto& cur = result.rows[best];
    if (cand.wer_percent < cur.wer_percent ||
        (cand.wer_percent == cur.wer_percent &&
         (cand.lmwt < cur.lmwt ||
          (cand.lmwt == cur.lmwt && cand.w_general > cur.w_general))))
      best = i;
  }
  result.best = best;
  return result;
}

GridResult grid_search(const SystemProvider& a, const SystemProvider& b,
                       const score::Transcripts& refs,
                       const std::vector<double>& lmwt_set,
                       const std::vector<std::pair<double, double>>& ratio_set) {
  if (lmwt_set.empty() || ratio_set.empty())
    throw Error("grid_search: empty grid axes");
  std::vector<GridRow> rows;
  for (double lmwt : lmwt_set) {
    const SystemOutput& sys_a = a(lmwt);
    const SystemOutput& sys_b = b(lmwt);
    for (const auto& [wg, wc] : ratio_set) {
      CombinationConfig cfg{lmwt, wg, wc};
      auto hyps = combine_systems(sys_a, sys_b, cfg);
      auto wer = score::corpus_wer(refs, hyps);
      rows.push_back({lmwt, wg, wc, wer.total.wer_percent()});
    }
  }
  return select_best(std::move(rows));
}

SweepResult select_best_sweep(std::vector<SweepRow> rows) {
  if (rows.empty()) throw Error("select_best_sweep: empty sweep");
  SweepResult result;
  result.rows = std::move(rows);
  size_t best = 0;
  for (size_t i = 1; i < result.rows.size(); ++i) {
    const auto& cand = result.rows[i];
    const auto& cur = result.rows[best];
    if (cand.wer_percent < cur.wer_percent ||
        (cand.wer_percent == cur.wer_percent && cand.lmwt < cur.lmwt))
      best = i;
  }
  result.best = best;
  return result;
}

SweepResult single_system_sweep(const HypothesisProvider& system,
                                const score::Transcripts& refs,
                                const std::vector<double>& lmwt_set) {
  if (lmwt_set.empty()) throw Error("single_system_sweep: empty lmwt set");
  std::vector<SweepRow> rows;
  for (double lmwt : lmwt_set) {
    auto hyps = system(lmwt);
    auto wer = score::corpus_wer(refs, hyps);
    rows.push_back({lmwt, wer.total.wer_percent()});
  }
  return select_best_sweep(std::move(rows));
}

std::string render_grid_table(const GridResult& grid) {
  std::ostringstream out;
  out << "LMWT  General-ratio  Conversation-ratio  WER\n";
  for (size_t i = 0; i < grid.rows.size(); ++i) {
    const auto& r = grid.rows[i];
    out << strprintf("%-5g %-14.2f %-19.2f %s%s\n", r.lmwt, r.w_general,
                     r.w_conversation,
                     score::format_wer_percent(r.wer_percent).c_str(),
                     i == grid.best ? "  <== best" : "");
  }
  return out.str();
}

std::string render_sweep_table(const SweepResult& sweep) {
  std::ostringstream out;
  out << "LMWT  WER\n";
  for (size_t i = 0; i < sweep.rows.size(); ++i) {
    const auto& r = sweep.rows[i];
    out << strprintf("%-5g %s%s\n", r.lmwt,
                     score::format_wer_percent(r.wer_percent).c_str(),
                     i == sweep.best ? "  <== best" : "");
  }
  return out.str();
}

}  // namespace lmcomb::combine
