#ifndef LMCOMB_NGRAM_HPP
#define LMCOMB_NGRAM_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmcomb/corpus.hpp"
#include "lmcomb/util.hpp"

namespace lmcomb::ngram {

using WordId = uint32_t;

// Word <-> dense id bijection with fixed reserved entries.
class Vocabulary {
 public:
  static constexpr WordId kBos = 0;  // <s>
  static constexpr WordId kEos = 1;  // </s>
  static constexpr WordId kUnk = 2;  // <unk>

  static constexpr const char* kBosWord = "<s>";
  static constexpr const char* kEosWord = "</s>";
  static constexpr const char* kUnkWord = "<unk>";

  Vocabulary();

  WordId add(const std::string& word);            // get or insert
  std::optional<WordId> find(const std::string& word) const;
  WordId find_or_unk(const std::string& word) const;
  const std::string& word(WordId id) const;
  size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

using Key = std::vector<WordId>;

struct KeyHash {
  size_t operator()(const Key& k) const {
    uint64_t h = 0x9e3779b97f4a7c15ull;
    for (WordId w : k) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return static_cast<size_t>(h);
  }
};

template <typename V>
using KeyMap = std::unordered_map<Key, V, KeyHash>;

// Exact joint counts for all orders 1..n.  Sentences are wrapped with
// <s>/</s>; the left <s> pad is added only for order >= 2 since an order-1
// model has no use for a start-of-sentence context.
class CountTable {
 public:
  CountTable(int order, Vocabulary vocab);

  int order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  void add_sentence(std::span<const WordId> words);
  void merge(const CountTable& other);  // other must share this vocabulary

  uint64_t count(std::span<const WordId> gram) const;
  const KeyMap<uint64_t>& table(int n) const { return tables_.at(n - 1); }
  KeyMap<uint64_t>& table(int n) { return tables_.at(n - 1); }
  uint64_t sentence_count() const { return sentences_; }

 private:
  int order_;
  Vocabulary vocab_;
  std::vector<KeyMap<uint64_t>> tables_;
  uint64_t sentences_ = 0;
};

struct CountOptions {
  // Words with corpus frequency <= unk_cutoff are replaced by <unk> before
  // counting (0 disables the mapping).
  uint64_t unk_cutoff = 0;
};

CountTable count_ngrams(const corpus::NormalizedText& text, int order,
                        const CountOptions& opts = {});

struct Prob {
  double logprob = 0.0;   // log10
  double backoff = 0.0;   // log10; unused at the highest order
};

// Backoff n-gram model over log10 probabilities.
class ArpaModel {
 public:
  ArpaModel(int order, Vocabulary vocab);

  int order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  const KeyMap<Prob>& entries(int n) const { return entries_.at(n - 1); }
  KeyMap<Prob>& entries(int n) { return entries_.at(n - 1); }
  size_t entry_count(int n) const { return entries_.at(n - 1).size(); }
  size_t total_entries() const;

  const Prob* find(std::span<const WordId> gram) const;

  // Backoff recursion: stored probability of the longest matching suffix of
  // (history, word), plus the backoff weights skipped on the way down.
  double logprob(std::span<const WordId> history, WordId word) const;
  double logprob(const std::vector<std::string>& history, const std::string& word) const;

 private:
  int order_;
  Vocabulary vocab_;
  std::vector<KeyMap<Prob>> entries_;
};

struct TrainOptions {
  // Per-order minimum counts; n-grams below the cutoff are treated as unseen.
  // Index 0 applies to 2-grams (unigrams are never cut).
  std::vector<uint64_t> count_cutoffs;
  // Minimum probability for the <unk> unigram; the unigram distribution is
  // rescaled so it still sums to one.  0 keeps the estimated value.
  double unk_floor = 0.0;
  bool verbose = false;
};

// Interpolated modified Kneser-Ney estimation with count-of-count discounts;
// falls back to a fixed 0.75 discount (with a warning) for orders whose
// count-of-counts are degenerate.
ArpaModel train_mkn(const CountTable& counts, const TrainOptions& opts = {});

struct PerplexityResult {
  double ppl = 0.0;
  double total_log10 = 0.0;
  uint64_t events = 0;   // word tokens plus one </s> per sentence
  uint64_t oov_count = 0;
};

PerplexityResult perplexity(const ArpaModel& model, const corpus::NormalizedText& text);

// Relative-entropy pruning: drops n-grams (order >= 2) whose removal changes
// the model entropy by less than `threshold`, then recomputes backoff
// weights.  Removal scores are computed against the unpruned model, so a
// higher threshold always keeps a subset of the n-grams a lower one keeps.
ArpaModel prune_entropy(const ArpaModel& model, double threshold);

void write_arpa(const ArpaModel& model, std::ostream& out);
void write_arpa_file(const ArpaModel& model, const std::string& path);
ArpaModel read_arpa(std::istream& in, const std::string& source_name = "<stream>");
ArpaModel read_arpa_file(const std::string& path);

// Recomputes every backoff weight from the stored probabilities, bottom-up,
// so that each history distribution sums to one.
void recompute_backoffs(ArpaModel* model);

// Max |1 - sum_w p(w|h)| over all stored histories (exhaustive; meant for
// small vocabularies).
double max_normalization_error(const ArpaModel& model);

// TSV count serialization: "n<TAB>gram<TAB>count", sorted.
void write_counts(const CountTable& counts, std::ostream& out);
CountTable read_counts(std::istream& in, const std::string& source_name = "<stream>");

}  // namespace lmcomb::ngram

#endif  // LMCOMB_NGRAM_HPP
