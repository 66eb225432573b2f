#ifndef LMCOMB_LATTICE_HPP
#define LMCOMB_LATTICE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lmcomb/ngram.hpp"

namespace lmcomb::lat {

inline constexpr const char* kEpsilon = "<eps>";

struct Arc {
  uint32_t from = 0;
  uint32_t to = 0;
  std::string word;   // kEpsilon for non-emitting arcs
  double am = 0.0;    // natural-log acoustic score
  double lm = 0.0;    // natural-log language model score

  bool is_epsilon() const { return word == kEpsilon; }
};

// Acyclic per-utterance hypothesis graph.  Node 0 is the unique start;
// every node lies on some start-to-final path.
struct Lattice {
  std::string utt_id;
  uint32_t num_nodes = 0;
  std::vector<Arc> arcs;
  std::vector<uint32_t> finals;

  // Nodes in topological order (computed by validate()).
  std::vector<uint32_t> topo_order;
  std::vector<std::vector<uint32_t>> out_arcs;  // node -> arc indices
  std::vector<std::vector<uint32_t>> in_arcs;

  // Checks acyclicity, start/final reachability and score finiteness;
  // fills the derived fields above.  Throws Error on violations.
  void validate();
  bool is_final(uint32_t node) const;
};

struct ScoredPath {
  std::vector<std::string> words;
  double am = 0.0;
  double lm = 0.0;
  double combined = 0.0;  // am + lmwt * lm (+ wip per word when set)
};

struct Hypothesis {
  std::vector<std::string> words;
  double am = 0.0;        // scores of the best path with this word sequence
  double lm = 0.0;
  double combined = 0.0;  // log-sum over all paths with this word sequence
  double posterior = 0.0;
};

struct NBestList {
  std::string utt_id;
  std::vector<Hypothesis> hyps;  // descending combined score
};

std::vector<Lattice> parse_lattices(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Lattice> parse_lattice_file(const std::string& path);
void write_lattices(const std::vector<Lattice>& lats, std::ostream& out);
void write_lattice_file(const std::vector<Lattice>& lats, const std::string& path);

// Maximizes am + lmwt*lm (+ wip per word) over start-to-final paths by
// dynamic programming in topological order.  Ties prefer the
// lexicographically smallest word sequence.
ScoredPath best_path(const Lattice& lat, double lmwt, double wip = 0.0);

struct NBestOptions {
  double wip = 0.0;
  // Path enumeration bound; fixture-scale lattices stay far below it.
  size_t max_paths = 200000;
};

// Top-k distinct word sequences.  Scores of duplicate word sequences are
// log-summed before ranking; posteriors are exact softmax masses over the
// complete path set (denominator from the forward algorithm).
NBestList nbest(const Lattice& lat, double lmwt, size_t k,
                const NBestOptions& opts = {});

// Forward-backward arc posteriors at the given LM weight.
std::vector<double> arc_posteriors(const Lattice& lat, double lmwt, double wip = 0.0);

// Natural-log total path mass: ln sum over paths exp(am + lmwt*lm).
double forward_total(const Lattice& lat, double lmwt, double wip = 0.0);

// Second-pass rescoring: expands nodes so each carries a unique (order-1)
// word LM history rooted at <s>, then replaces every arc's lm score with
// ln(10) * logprob(history, word).  Epsilon arcs keep lm = 0.  The multiset
// of word sequences is preserved.
Lattice rescore(const Lattice& lat, const ngram::ArpaModel& model);

}  // namespace lmcomb::lat

#endif  // LMCOMB_LATTICE_HPP
