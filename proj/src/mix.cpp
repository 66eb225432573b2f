#include "lmcomb/mix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace lmcomb::mix {

using ngram::ArpaModel;
using ngram::Key;
using ngram::Vocabulary;
using ngram::WordId;

void MixtureWeights::validate() const {
  if (lambda.empty()) throw Error("MixtureWeights: empty");
  double sum = 0.0;
  for (double l : lambda) {
    if (l < 0.0) throw Error("MixtureWeights: negative weight");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(strprintf("MixtureWeights: sum %.12f != 1", sum));
}

namespace {

// Components extended to the union vocabulary: a component's <unk> mass is
// divided over the union words it has never seen (plus <unk> itself), so
// each extended distribution still sums to one over the union.
struct UnionView {
  std::vector<const ArpaModel*> components;
  std::vector<double> unk_divisor;

  static UnionView build(const std::vector<const ArpaModel*>& components) {
    if (components.empty()) throw Error("mixture: no components");
    UnionView view;
    view.components = components;
    std::set<std::string> union_words;
    for (const auto* c : components)
      for (WordId w = 0; w < c->vocab().size(); ++w)
        union_words.insert(c->vocab().word(w));
    for (const auto* c : components) {
      size_t unseen = union_words.size() - c->vocab().size();
      view.unk_divisor.push_back(static_cast<double>(unseen + 1));
    }
    return view;
  }

  double prob(size_t i, const std::vector<std::string>& history,
              const std::string& word) const {
    const ArpaModel& m = *components[i];
    Key h;
    h.reserve(history.size());
    for (const auto& w : history) h.push_back(m.vocab().find_or_unk(w));
    auto id = m.vocab().find(word);
    if (id && *id != Vocabulary::kUnk)
      return std::pow(10.0, m.logprob(h, *id));
    return std::pow(10.0, m.logprob(h, Vocabulary::kUnk)) / unk_divisor[i];
  }
};

// Per-event component probabilities on the dev text, cached once.  Events
// follow the perplexity convention: every token plus one </s> per sentence.
struct DevMatrix {
  std::vector<std::vector<double>> probs;  // [event][component], linear space
  std::vector<std::string> event_tokens;
};

DevMatrix dev_probabilities(const UnionView& view,
                            const corpus::NormalizedText& dev_text, int threads) {
  DevMatrix m;
  std::vector<std::vector<std::string>> events;  // history + word, as strings
  for (const auto& sent : dev_text.sentences) {
    std::vector<std::string> context{Vocabulary::kBosWord};
    for (const auto& tok : sent) {
      auto ev = context;
      ev.push_back(tok);
      events.push_back(std::move(ev));
      context.push_back(tok);
    }
    context.push_back(Vocabulary::kEosWord);
    events.push_back(context);
  }
  if (events.empty()) throw Error("estimate_weights_em: empty dev text");
  m.probs.assign(events.size(), std::vector<double>(view.components.size(), 0.0));
  m.event_tokens.resize(events.size());
  parallel_for(events.size(), threads, [&](size_t begin, size_t end) {
    for (size_t e = begin; e < end; ++e) {
      std::vector<std::string> history(events[e].begin(), events[e].end() - 1);
      const std::string& word = events[e].back();
      for (size_t i = 0; i < view.components.size(); ++i)
        m.probs[e][i] = view.prob(i, history, word);
      m.event_tokens[e] = word;
    }
  });
  return m;
}

double dev_ppl(const DevMatrix& m, const std::vector<double>& lambda) {
  double total_log10 = 0.0;
  for (size_t e = 0; e < m.probs.size(); ++e) {
    double p = 0.0;
    for (size_t i = 0; i < lambda.size(); ++i) p += lambda[i] * m.probs[e][i];
    total_log10 += std::log10(p);
  }
  return std::pow(10.0, -total_log10 / static_cast<double>(m.probs.size()));
}

}  // namespace

EmResult estimate_weights_em(const std::vector<const ArpaModel*>& components,
                             const corpus::NormalizedText& dev_text,
                             const EmOptions& opts) {
  if (components.size() < 2)
    throw Error("estimate_weights_em: need at least two components");
  DevMatrix m = dev_probabilities(UnionView::build(components), dev_text, opts.threads);
  for (size_t e = 0; e < m.probs.size(); ++e) {
    double any = 0.0;
    for (double p : m.probs[e]) any += p;
    if (any <= 0.0)
      throw Error("estimate_weights_em: token '" + m.event_tokens[e] +
                  "' has zero probability under every component");
  }

  EmResult result;
  const size_t nc = components.size();
  std::vector<double> lambda(nc, 1.0 / static_cast<double>(nc));
  result.ppl_trace.push_back(dev_ppl(m, lambda));

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    std::vector<double> resp_sum(nc, 0.0);
    for (const auto& row : m.probs) {
      double denom = 0.0;
      for (size_t i = 0; i < nc; ++i) denom += lambda[i] * row[i];
      for (size_t i = 0; i < nc; ++i) resp_sum[i] += lambda[i] * row[i] / denom;
    }
    for (size_t i = 0; i < nc; ++i)
      lambda[i] = resp_sum[i] / static_cast<double>(m.probs.size());
    result.ppl_trace.push_back(dev_ppl(m, lambda));
    ++result.iterations;
    double prev = result.ppl_trace[result.ppl_trace.size() - 2];
    double cur = result.ppl_trace.back();
    if (prev - cur < opts.tol) break;
  }

  if (opts.weight_floor > 0.0) {
    double sum = 0.0;
    for (double& l : lambda) {
      l = std::max(l, opts.weight_floor);
      sum += l;
    }
    for (double& l : lambda) l /= sum;
  }
  result.weights.lambda = std::move(lambda);
  result.weights.validate();
  return result;
}

namespace {

double mixture_prob(const UnionView& view, const MixtureWeights& weights,
                    const std::vector<std::string>& history, const std::string& word) {
  double p = 0.0;
  for (size_t i = 0; i < view.components.size(); ++i)
    p += weights.lambda[i] * view.prob(i, history, word);
  return p;
}

}  // namespace

double mixture_logprob(const MixtureModel& mixture,
                       const std::vector<std::string>& history,
                       const std::string& word) {
  mixture.weights.validate();
  if (mixture.components.size() != mixture.weights.lambda.size())
    throw Error("mixture_logprob: component/weight count mismatch");
  UnionView view = UnionView::build(mixture.components);
  double p = mixture_prob(view, mixture.weights, history, word);
  return p > 0.0 ? std::log10(p) : kLog10Zero;
}

double component_logprob(const MixtureModel& mixture, size_t component,
                         const std::vector<std::string>& history,
                         const std::string& word) {
  if (component >= mixture.components.size())
    throw Error("component_logprob: index out of range");
  UnionView view = UnionView::build(mixture.components);
  double p = view.prob(component, history, word);
  return p > 0.0 ? std::log10(p) : kLog10Zero;
}

double mixture_perplexity(const MixtureModel& mixture,
                          const corpus::NormalizedText& dev_text) {
  mixture.weights.validate();
  UnionView view = UnionView::build(mixture.components);
  double total = 0.0;
  uint64_t events = 0;
  for (const auto& sent : dev_text.sentences) {
    std::vector<std::string> context{Vocabulary::kBosWord};
    for (const auto& tok : sent) {
      total += std::log10(mixture_prob(view, mixture.weights, context, tok));
      context.push_back(tok);
      ++events;
    }
    total += std::log10(
        mixture_prob(view, mixture.weights, context, Vocabulary::kEosWord));
    ++events;
  }
  if (events == 0) throw Error("mixture_perplexity: empty text");
  return std::pow(10.0, -total / static_cast<double>(events));
}

std::vector<RankedComponent> rank_by_perplexity(
    const std::vector<const ArpaModel*>& components,
    const corpus::NormalizedText& dev_text) {
  std::vector<RankedComponent> ranked;
  for (size_t i = 0; i < components.size(); ++i)
    ranked.push_back({i, ngram::perplexity(*components[i], dev_text).ppl});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedComponent& a, const RankedComponent& b) {
                     if (a.ppl != b.ppl) return a.ppl < b.ppl;
                     return a.index < b.index;
                   });
  return ranked;
}

ngram::ArpaModel merge_static(const MixtureModel& mixture) {
  mixture.weights.validate();
  if (mixture.components.empty()) throw Error("merge_static: no components");
  if (mixture.components.size() != mixture.weights.lambda.size())
    throw Error("merge_static: component/weight count mismatch");

  int order = 0;
  for (const auto* c : mixture.components) order = std::max(order, c->order());

  // Union vocabulary; reserved words keep their fixed slots.
  Vocabulary vocab;
  for (const auto* c : mixture.components)
    for (WordId w = 0; w < c->vocab().size(); ++w) vocab.add(c->vocab().word(w));

  ArpaModel merged(order, std::move(vocab));
  UnionView view = UnionView::build(mixture.components);

  for (int k = 1; k <= order; ++k) {
    // Union of the component n-gram sets at this order, as merged-vocab keys.
    ngram::KeyMap<char> union_set;
    for (const auto* c : mixture.components) {
      if (k > c->order()) continue;
      for (const auto& [gram, prob] : c->entries(k)) {
        (void)prob;
        Key key;
        key.reserve(gram.size());
        for (WordId w : gram) key.push_back(merged.vocab().add(c->vocab().word(w)));
        union_set.emplace(std::move(key), 1);
      }
    }
    auto& table = merged.entries(k);
    for (const auto& [gram, tag] : union_set) {
      (void)tag;
      std::vector<std::string> words;
      for (WordId w : gram) words.push_back(merged.vocab().word(w));
      std::vector<std::string> history(words.begin(), words.end() - 1);
      if (gram.back() == Vocabulary::kBos) {
        table.emplace(gram, ngram::Prob{kLog10Zero, 0.0});
        continue;
      }
      double p = mixture_prob(view, mixture.weights, history, words.back());
      table.emplace(gram, ngram::Prob{p > 0.0 ? std::log10(p) : kLog10Zero, 0.0});
    }
  }
  ngram::recompute_backoffs(&merged);
  return merged;
}

void write_weights_file(const std::string& path,
                        const std::vector<std::string>& component_paths,
                        const MixtureWeights& weights, double dev_ppl) {
  if (component_paths.size() != weights.lambda.size())
    throw Error("write_weights_file: path/weight count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (size_t i = 0; i < component_paths.size(); ++i)
    out << component_paths[i] << '\t' << strprintf("%.10f", weights.lambda[i]) << '\n';
  out << strprintf("# dev-ppl %.6f\n", dev_ppl);
}

WeightsFile read_weights_file(const std::string& path) {
  WeightsFile wf;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 2)
      throw Error(path + ": expected 'component-path<TAB>weight': " + line);
    wf.component_paths.push_back(fields[0]);
    wf.weights.lambda.push_back(std::strtod(fields[1].c_str(), nullptr));
  }
  if (wf.component_paths.empty()) throw Error(path + ": no components listed");
  wf.weights.validate();
  return wf;
}

}  // namespace lmcomb::mix
