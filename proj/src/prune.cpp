#include <cmath>

#include "lmcomb/ngram.hpp"

namespace lmcomb::ngram {

namespace {

struct HistoryInfo {
  double num = 1.0;      // 1 - sum of stored successor probabilities
  double den = 1.0;      // 1 - same mass under the shortened history
  double bow_log = 0.0;  // stored backoff weight of the history
  double log_ph = 0.0;   // log10 marginal of the history (chain rule)
};

// log10 of the chain-rule marginal of the history.  The <s> unigram is a
// position marker, not an event, so it contributes probability one.
double history_log_marginal(const ArpaModel& model, const Key& hist) {
  double lp = 0.0;
  for (size_t i = 0; i < hist.size(); ++i) {
    if (hist[i] == Vocabulary::kBos) continue;
    lp += model.logprob(std::span<const WordId>(hist.data(), i), hist[i]);
  }
  return lp;
}

}  // namespace

ArpaModel prune_entropy(const ArpaModel& model, double threshold) {
  if (threshold < 0.0) throw Error("prune_entropy: threshold must be >= 0");
  const int order = model.order();

  // Removal cost of every prunable n-gram, measured against the unpruned
  // model.  Scoring first and applying afterwards makes survival monotone in
  // the threshold.
  std::vector<KeyMap<double>> delta(order + 1);
  for (int k = 2; k <= order; ++k) {
    KeyMap<HistoryInfo> infos;
    for (const auto& [gram, prob] : model.entries(k)) {
      Key hist(gram.begin(), gram.end() - 1);
      auto [it, inserted] = infos.try_emplace(hist);
      auto& info = it->second;
      info.num -= std::pow(10.0, prob.logprob);
      info.den -= std::pow(
          10.0, model.logprob(std::span<const WordId>(gram.data() + 1, gram.size() - 2),
                              gram.back()));
      if (inserted) {
        const Prob* h = model.find(hist);
        info.bow_log = h ? h->backoff : 0.0;
        info.log_ph = history_log_marginal(model, hist);
      }
    }
    for (const auto& [gram, prob] : model.entries(k)) {
      Key hist(gram.begin(), gram.end() - 1);
      const auto& info = infos.at(hist);
      double a_log = prob.logprob;
      double a = std::pow(10.0, a_log);
      double alt_log = model.logprob(
          std::span<const WordId>(gram.data() + 1, gram.size() - 2), gram.back());
      double alt = std::pow(10.0, alt_log);
      double num = std::max(info.num, 0.0);
      double bow_new = (num + a) / (info.den + alt);
      double bow_new_log = std::log10(bow_new);
      double ph = std::pow(10.0, info.log_ph);
      double d = -ph * (a * (alt_log + bow_new_log - a_log) +
                        num * (bow_new_log - info.bow_log));
      delta[k][gram] = std::max(d, 0.0);
    }
  }

  // Keep an n-gram if its removal cost reaches the threshold or if a longer
  // surviving n-gram still needs it as a context.
  ArpaModel pruned(order, model.vocab());
  pruned.entries(1) = model.entries(1);
  // needed_context[k] holds the (k-1)-gram prefixes of surviving k-grams.
  std::vector<KeyMap<char>> needed_context(order + 2);
  for (int k = order; k >= 2; --k) {
    for (const auto& [gram, prob] : model.entries(k)) {
      const auto& needed = needed_context[k + 1];
      bool is_context = needed.find(gram) != needed.end();
      if (!is_context && delta[k].at(gram) < threshold) continue;
      pruned.entries(k).emplace(gram, Prob{prob.logprob, 0.0});
      if (k >= 3) needed_context[k][Key(gram.begin(), gram.end() - 1)] = 1;
    }
  }
  recompute_backoffs(&pruned);
  return pruned;
}

}  // namespace lmcomb::ngram
