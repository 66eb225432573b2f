#ifndef LMCOMB_FIXTURE_HPP
#define LMCOMB_FIXTURE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lmcomb/corpus.hpp"

namespace lmcomb::fixture {

// Synthetic two-domain decoding experiment: a planted reference transcript,
// per-domain training corpora, and confusion lattices whose acoustic scores
// come from toy Gaussian emissions.  At ambiguous slots the correct word is
// only recoverable from domain context, so each domain LM fixes a different
// half of the errors.
struct FixtureOptions {
  std::string out_dir;
  uint64_t seed = 9;
  int num_utterances = 120;
  int train_sentences = 4000;   // per domain
  int dev_sentences = 300;      // per domain
  int first_pass_order = 3;
  double noise = 0.55;          // acoustic noise stddev
  double cluster_spread = 0.3;  // prototype distance inside a confusion cluster
  int dim = 6;
};

struct FixtureInfo {
  std::string general_corpus;
  std::string conversation_corpus;
  std::string general_dev;
  std::string conversation_dev;
  std::string mixed_dev;
  std::string refs;
  std::string lattices;
  std::string gmm_states;
  std::string frames;
  int num_utterances = 0;
};

FixtureInfo make_fixture(const FixtureOptions& opts);

// Markov text with a Zipf-shaped vocabulary; used by training-scale and
// normalization tests.  Sentences have 8..20 tokens.
corpus::NormalizedText synthesize_text(uint64_t seed, int sentences, int vocab_size);

}  // namespace lmcomb::fixture

#endif  // LMCOMB_FIXTURE_HPP
