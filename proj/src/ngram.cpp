#include "lmcomb/ngram.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <map>

namespace lmcomb::ngram {

Vocabulary::Vocabulary() {
  add(kBosWord);
  add(kEosWord);
  add(kUnkWord);
}

WordId Vocabulary::add(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  WordId id = static_cast<WordId>(words_.size());
  words_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

std::optional<WordId> Vocabulary::find(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::find_or_unk(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(WordId id) const {
  if (id >= words_.size()) throw Error("Vocabulary: id out of range");
  return words_[id];
}

CountTable::CountTable(int order, Vocabulary vocab)
    : order_(order), vocab_(std::move(vocab)) {
  if (order < 1) throw Error("CountTable: order must be >= 1");
  tables_.resize(order);
}

void CountTable::add_sentence(std::span<const WordId> words) {
  Key padded;
  padded.reserve(words.size() + 2);
  if (order_ >= 2) padded.push_back(Vocabulary::kBos);
  padded.insert(padded.end(), words.begin(), words.end());
  padded.push_back(Vocabulary::kEos);
  for (int k = 1; k <= order_; ++k) {
    if (padded.size() < static_cast<size_t>(k)) break;
    auto& table = tables_[k - 1];
    for (size_t i = 0; i + k <= padded.size(); ++i) {
      Key gram(padded.begin() + i, padded.begin() + i + k);
      ++table[gram];
    }
  }
  ++sentences_;
}

void CountTable::merge(const CountTable& other) {
  if (other.order_ != order_ || other.vocab_.size() != vocab_.size())
    throw Error("CountTable::merge: incompatible tables");
  for (int k = 0; k < order_; ++k)
    for (const auto& [gram, c] : other.tables_[k]) tables_[k][gram] += c;
  sentences_ += other.sentences_;
}

uint64_t CountTable::count(std::span<const WordId> gram) const {
  if (gram.empty() || gram.size() > static_cast<size_t>(order_)) return 0;
  const auto& table = tables_[gram.size() - 1];
  auto it = table.find(Key(gram.begin(), gram.end()));
  return it == table.end() ? 0 : it->second;
}

CountTable count_ngrams(const corpus::NormalizedText& text, int order,
                        const CountOptions& opts) {
  if (order < 1) throw Error("count_ngrams: order must be >= 1");
  Vocabulary vocab;
  if (opts.unk_cutoff > 0) {
    std::unordered_map<std::string, uint64_t> freq;
    for (const auto& sent : text.sentences)
      for (const auto& tok : sent) ++freq[tok];
    for (const auto& sent : text.sentences)
      for (const auto& tok : sent)
        if (freq[tok] > opts.unk_cutoff) vocab.add(tok);
  } else {
    for (const auto& sent : text.sentences)
      for (const auto& tok : sent) vocab.add(tok);
  }
  CountTable counts(order, std::move(vocab));
  Key ids;
  for (const auto& sent : text.sentences) {
    ids.clear();
    for (const auto& tok : sent) ids.push_back(counts.vocab().find_or_unk(tok));
    counts.add_sentence(ids);
  }
  return counts;
}

ArpaModel::ArpaModel(int order, Vocabulary vocab)
    : order_(order), vocab_(std::move(vocab)) {
  if (order < 1) throw Error("ArpaModel: order must be >= 1");
  entries_.resize(order);
}

size_t ArpaModel::total_entries() const {
  size_t n = 0;
  for (const auto& t : entries_) n += t.size();
  return n;
}

const Prob* ArpaModel::find(std::span<const WordId> gram) const {
  if (gram.empty() || gram.size() > static_cast<size_t>(order_)) return nullptr;
  const auto& table = entries_[gram.size() - 1];
  auto it = table.find(Key(gram.begin(), gram.end()));
  return it == table.end() ? nullptr : &it->second;
}

double ArpaModel::logprob(std::span<const WordId> history, WordId word) const {
  size_t hl = std::min(history.size(), static_cast<size_t>(order_ - 1));
  const WordId* h = history.data() + (history.size() - hl);
  thread_local Key key;
  double bowsum = 0.0;
  for (size_t len = hl;; --len) {
    key.assign(h + (hl - len), h + hl);
    key.push_back(word);
    const auto& table = entries_[len];
    auto it = table.find(key);
    if (it != table.end()) return bowsum + it->second.logprob;
    if (len == 0) break;
    // No stored probability at this length: charge the history's backoff
    // weight (1.0 when the history itself is unstored) and shorten.
    key.pop_back();
    auto hit = entries_[len - 1].find(key);
    if (hit != entries_[len - 1].end()) bowsum += hit->second.backoff;
  }
  // Word absent from the unigram table: fall back to <unk>, then to the
  // zero-probability sentinel.
  if (word != Vocabulary::kUnk) return bowsum + logprob({}, Vocabulary::kUnk);
  return bowsum + kLog10Zero;
}

double ArpaModel::logprob(const std::vector<std::string>& history,
                          const std::string& word) const {
  Key h;
  h.reserve(history.size());
  for (const auto& w : history) h.push_back(vocab_.find_or_unk(w));
  return logprob(h, vocab_.find_or_unk(word));
}

namespace {

struct Discounts {
  double d1 = 0.75, d2 = 0.75, d3p = 0.75;
  bool fallback = false;

  double of(uint64_t count) const {
    if (count == 0) return 0.0;
    if (count == 1) return d1;
    if (count == 2) return d2;
    return d3p;
  }
};

Discounts estimate_discounts(int order, uint64_t n1, uint64_t n2, uint64_t n3,
                             uint64_t n4, bool verbose) {
  Discounts d;
  if (n1 == 0 || n2 == 0 || n3 == 0 || n4 == 0) {
    d.fallback = true;
  } else {
    double y = static_cast<double>(n1) / (n1 + 2.0 * n2);
    d.d1 = 1.0 - 2.0 * y * n2 / n1;
    d.d2 = 2.0 - 3.0 * y * n3 / n2;
    d.d3p = 3.0 - 4.0 * y * n4 / n3;
    if (d.d1 <= 0.0 || d.d2 <= 0.0 || d.d3p <= 0.0) d.fallback = true;
  }
  if (d.fallback) {
    d.d1 = d.d2 = d.d3p = 0.75;
    std::cerr << "lmcomb: order " << order
              << " count-of-counts degenerate; using fixed discount 0.75\n";
  } else if (verbose) {
    std::cerr << "lmcomb: order " << order << " discounts " << d.d1 << " "
              << d.d2 << " " << d.d3p << "\n";
  }
  return d;
}

// Backoff weights for stored k-grams, from the stored probabilities:
//   bow(h) = (1 - sum_{stored (h,w)} p(w|h)) / (1 - sum_{stored (h,w)} p(w|h'))
void compute_backoffs_at(ArpaModel* model, int k) {
  KeyMap<std::pair<double, double>> sums;  // h -> (stored mass, lower-order mass)
  for (const auto& [gram, prob] : model->entries(k + 1)) {
    Key hist(gram.begin(), gram.end() - 1);
    auto& s = sums[hist];
    s.first += std::pow(10.0, prob.logprob);
    s.second += std::pow(
        10.0, model->logprob(std::span<const WordId>(gram.data() + 1, gram.size() - 2),
                             gram.back()));
  }
  for (auto& [hist, prob] : model->entries(k)) {
    auto it = sums.find(hist);
    if (it == sums.end()) {
      prob.backoff = 0.0;  // no successors: full weight to the lower order
      continue;
    }
    double num = 1.0 - it->second.first;
    double den = 1.0 - it->second.second;
    if (num < 0.0) num = 0.0;
    if (den <= 0.0) {
      // Lower order has no mass left outside the stored successors; the
      // backoff path is unreachable.
      prob.backoff = 0.0;
    } else if (num == 0.0) {
      prob.backoff = kLog10Zero;
    } else {
      prob.backoff = std::log10(num / den);
    }
  }
}

}  // namespace

void recompute_backoffs(ArpaModel* model) {
  for (int k = 1; k < model->order(); ++k) compute_backoffs_at(model, k);
}

ArpaModel train_mkn(const CountTable& counts, const TrainOptions& opts) {
  const int order = counts.order();
  const Vocabulary& vocab = counts.vocab();

  // Raw counts with per-order cutoffs applied.
  std::vector<KeyMap<uint64_t>> raw(order);
  for (int k = 1; k <= order; ++k) {
    uint64_t cutoff = 0;
    if (k >= 2 && static_cast<size_t>(k - 2) < opts.count_cutoffs.size())
      cutoff = opts.count_cutoffs[k - 2];
    for (const auto& [gram, c] : counts.table(k))
      if (c >= std::max<uint64_t>(cutoff, 1)) raw[k - 1].emplace(gram, c);
  }

  // Kneser-Ney adjusted counts: the highest order keeps raw counts; lower
  // orders use continuation counts (number of distinct left extensions),
  // except for n-grams starting with <s>, which cannot be extended left.
  std::vector<KeyMap<uint64_t>> adj(order);
  adj[order - 1] = raw[order - 1];
  for (int k = order - 1; k >= 1; --k) {
    auto& table = adj[k - 1];
    for (const auto& [gram, c] : raw[k - 1])
      if (gram.front() == Vocabulary::kBos) table.emplace(gram, c);
    for (const auto& [gram, c] : raw[k]) {
      (void)c;
      Key suffix(gram.begin() + 1, gram.end());
      if (suffix.front() == Vocabulary::kBos) continue;
      ++table[suffix];
    }
  }

  // Discount parameters per order, from count-of-counts of the adjusted
  // counts (the <s> unigram is a non-event).
  std::vector<Discounts> discounts(order + 1);
  for (int k = 1; k <= order; ++k) {
    uint64_t n[5] = {0, 0, 0, 0, 0};
    for (const auto& [gram, c] : adj[k - 1]) {
      if (gram.back() == Vocabulary::kBos) continue;
      if (c >= 1 && c <= 4) ++n[c];
    }
    discounts[k] = estimate_discounts(k, n[1], n[2], n[3], n[4], opts.verbose);
  }

  ArpaModel model(order, vocab);

  // Unigram distribution, interpolated with uniform over the event space
  // (every vocabulary word except <s>).
  {
    const auto& d = discounts[1];
    const size_t n_events = vocab.size() - 1;
    double total = 0.0;
    uint64_t big_n1 = 0, big_n2 = 0, big_n3p = 0;
    for (const auto& [gram, c] : adj[0]) {
      if (gram.front() == Vocabulary::kBos) continue;
      total += static_cast<double>(c);
      if (c == 1) ++big_n1;
      else if (c == 2) ++big_n2;
      else ++big_n3p;
    }
    if (total <= 0.0) throw Error("train_mkn: no events in counts");
    double gamma = (d.d1 * big_n1 + d.d2 * big_n2 + d.d3p * big_n3p) / total;
    double uniform = 1.0 / static_cast<double>(n_events);
    std::vector<double> p(vocab.size(), gamma * uniform);
    for (const auto& [gram, c] : adj[0]) {
      if (gram.front() == Vocabulary::kBos) continue;
      p[gram.front()] += std::max(static_cast<double>(c) - d.of(c), 0.0) / total;
    }
    if (opts.unk_floor > 0.0 && p[Vocabulary::kUnk] < opts.unk_floor) {
      double scale = (1.0 - opts.unk_floor) / (1.0 - p[Vocabulary::kUnk]);
      for (size_t w = 0; w < p.size(); ++w) p[w] *= scale;
      p[Vocabulary::kUnk] = opts.unk_floor;
    }
    auto& unigrams = model.entries(1);
    for (WordId w = 0; w < vocab.size(); ++w) {
      Prob prob;
      prob.logprob = (w == Vocabulary::kBos) ? kLog10Zero : std::log10(p[w]);
      unigrams.emplace(Key{w}, prob);
    }
  }

  // Higher orders: discounted mass plus gamma times the lower-order
  // interpolated probability.  Backoff weights for order k-1 are derived
  // right after order k so that deeper orders can already back off through
  // them when a cutoff removed the direct lower-order entry.
  for (int k = 2; k <= order; ++k) {
    const auto& d = discounts[k];
    // history -> (total, N1, N2, N3+)
    KeyMap<std::array<uint64_t, 4>> hist_stats;
    const auto& lower = model.entries(k - 1);
    for (const auto& [gram, c] : adj[k - 1]) {
      Key hist(gram.begin(), gram.end() - 1);
      if (lower.find(hist) == lower.end()) continue;  // orphaned by cutoffs
      auto& s = hist_stats[hist];
      s[0] += c;
      if (c == 1) ++s[1];
      else if (c == 2) ++s[2];
      else ++s[3];
    }
    auto& table = model.entries(k);
    for (const auto& [gram, c] : adj[k - 1]) {
      Key hist(gram.begin(), gram.end() - 1);
      auto hs = hist_stats.find(hist);
      if (hs == hist_stats.end()) continue;
      const auto& s = hs->second;
      double total = static_cast<double>(s[0]);
      double gamma = (d.d1 * s[1] + d.d2 * s[2] + d.d3p * s[3]) / total;
      double lower_p = std::pow(
          10.0, model.logprob(std::span<const WordId>(gram.data() + 1, gram.size() - 2),
                              gram.back()));
      double p = std::max(static_cast<double>(c) - d.of(c), 0.0) / total +
                 gamma * lower_p;
      Prob prob;
      prob.logprob = std::log10(p);
      table.emplace(gram, prob);
    }
    compute_backoffs_at(&model, k - 1);
  }
  return model;
}

PerplexityResult perplexity(const ArpaModel& model, const corpus::NormalizedText& text) {
  PerplexityResult result;
  Key context;
  for (const auto& sent : text.sentences) {
    context.assign(1, Vocabulary::kBos);
    for (const auto& tok : sent) {
      auto id = model.vocab().find(tok);
      if (!id) ++result.oov_count;
      WordId w = id.value_or(Vocabulary::kUnk);
      result.total_log10 += model.logprob(context, w);
      context.push_back(w);
      ++result.events;
    }
    result.total_log10 += model.logprob(context, Vocabulary::kEos);
    ++result.events;
  }
  if (result.events == 0) throw Error("perplexity: empty text");
  result.ppl = std::pow(10.0, -result.total_log10 / static_cast<double>(result.events));
  return result;
}

double max_normalization_error(const ArpaModel& model) {
  double worst = 0.0;
  auto check_history = [&](std::span<const WordId> hist) {
    double sum = 0.0;
    for (WordId w = 0; w < model.vocab().size(); ++w)
      sum += std::pow(10.0, model.logprob(hist, w));
    worst = std::max(worst, std::abs(sum - 1.0));
  };
  check_history({});
  for (int k = 1; k < model.order(); ++k)
    for (const auto& [gram, prob] : model.entries(k)) {
      (void)prob;
      check_history(gram);
    }
  return worst;
}

void write_counts(const CountTable& counts, std::ostream& out) {
  for (int k = 1; k <= counts.order(); ++k) {
    std::map<std::string, uint64_t> sorted;
    for (const auto& [gram, c] : counts.table(k)) {
      std::vector<std::string> words;
      for (WordId w : gram) words.push_back(counts.vocab().word(w));
      sorted.emplace(join(words, " "), c);
    }
    for (const auto& [gram, c] : sorted)
      out << k << '\t' << gram << '\t' << c << '\n';
  }
}

CountTable read_counts(std::istream& in, const std::string& source_name) {
  struct Row {
    int n;
    std::vector<std::string> words;
    uint64_t count;
  };
  std::vector<Row> rows;
  int order = 0;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_on(line, '\t');
    if (fields.size() != 3)
      throw Error(strprintf("%s:%zu: expected n<TAB>gram<TAB>count",
                            source_name.c_str(), lineno));
    Row row;
    row.n = std::atoi(fields[0].c_str());
    row.words = split_whitespace(fields[1]);
    row.count = std::strtoull(fields[2].c_str(), nullptr, 10);
    if (row.n < 1 || row.words.size() != static_cast<size_t>(row.n))
      throw Error(strprintf("%s:%zu: gram length does not match order",
                            source_name.c_str(), lineno));
    order = std::max(order, row.n);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(source_name + ": empty counts file");
  Vocabulary vocab;
  for (const auto& row : rows)
    for (const auto& w : row.words) vocab.add(w);
  CountTable counts(order, std::move(vocab));
  for (const auto& row : rows) {
    Key gram;
    for (const auto& w : row.words) gram.push_back(counts.vocab().find_or_unk(w));
    counts.table(row.n)[gram] += row.count;
  }
  return counts;
}

}  // namespace lmcomb::ngram
