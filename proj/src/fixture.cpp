#include "lmcomb/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lmcomb/acoustic.hpp"
#include "lmcomb/lattice.hpp"
#include "lmcomb/mix.hpp"
#include "lmcomb/ngram.hpp"
#include "lmcomb/score.hpp"
#include "lmcomb/util.hpp"

namespace lmcomb::fixture {

namespace {

// Syllable-shaped word list, deterministic and collision-free.
std::vector<std::string> make_words(size_t n) {
  static const char* onsets[] = {"b", "c", "ch", "d", "g", "h", "kh", "l", "m",
                                 "n", "ng", "nh", "ph", "r", "s", "t", "th",
                                 "tr", "v", "x"};
  static const char* nuclei[] = {"a", "e", "i", "o", "u", "ai", "ao", "eo",
                                 "ia", "oi", "ua", "ui"};
  static const char* codas[] = {"", "m", "n", "ng", "c", "t"};
  std::vector<std::string> words;
  for (const char* coda : codas)
    for (const char* nucleus : nuclei)
      for (const char* onset : onsets) {
        words.push_back(std::string(onset) + nucleus + coda);
        if (words.size() == n) return words;
      }
  throw Error("make_words: requested more words than the syllable inventory");
}

struct WordInventory {
  // layout: core | shared contexts | cluster members | filler_g | filler_c
  std::vector<std::string> words;
  std::vector<std::vector<double>> protos;  // acoustic prototype per word

  size_t num_core = 10;
  size_t num_clusters = 8;  // one shared context word per cluster
  size_t num_filler = 10;   // per domain

  size_t core(size_t i) const { return i; }
  // The context word is shared between domains; which cluster member
  // follows it is what distinguishes the two domain languages.
  size_t ctx(size_t k) const { return num_core + k; }
  // cluster k members: 0 = general, 1 = conversation, 2 = decoy
  size_t cluster(size_t k, size_t member) const {
    return num_core + num_clusters + 3 * k + member;
  }
  size_t filler_g(size_t i) const {
    return num_core + 4 * num_clusters + i;
  }
  size_t filler_c(size_t i) const {
    return num_core + 4 * num_clusters + num_filler + i;
  }
  size_t total() const { return num_core + 4 * num_clusters + 2 * num_filler; }
};

WordInventory build_inventory(Rng* rng, int dim, double cluster_spread) {
  WordInventory inv;
  inv.words = make_words(inv.total());
  inv.protos.resize(inv.total());
  // Well-separated prototypes for unambiguous words.
  for (size_t w = 0; w < inv.total(); ++w) {
    inv.protos[w].resize(dim);
    for (int d = 0; d < dim; ++d) inv.protos[w][d] = rng->normal(0.0, 4.0);
  }
  // Confusion clusters: members share a center and differ by a small offset.
  for (size_t k = 0; k < inv.num_clusters; ++k) {
    std::vector<double> center(dim);
    for (int d = 0; d < dim; ++d) center[d] = rng->normal(0.0, 4.0);
    for (size_t m = 0; m < 3; ++m) {
      auto& p = inv.protos[inv.cluster(k, m)];
      for (int d = 0; d < dim; ++d)
        p[d] = center[d] + rng->normal(0.0, cluster_spread);
    }
  }
  return inv;
}

// One synthetic sentence: opener, (context, cluster-word) pairs with filler,
// closer.  In domain General the cluster slots hold the general member after
// a general context word, and symmetrically for Conversation.
std::vector<size_t> sample_sentence(const WordInventory& inv, bool general, Rng* rng) {
  std::vector<size_t> out;
  out.push_back(inv.core(rng->below(inv.num_core)));
  size_t pairs = 2 + rng->below(3);  // 2..4
  for (size_t p = 0; p < pairs; ++p) {
    size_t k = rng->below(inv.num_clusters);
    size_t member = general ? 0 : 1;
    if (rng->uniform() < 0.06) member = rng->below(3);  // rare surprises
    out.push_back(inv.ctx(k));
    out.push_back(inv.cluster(k, member));
    if (rng->uniform() < 0.5) {
      size_t f = rng->below(inv.num_filler);
      out.push_back(general ? inv.filler_g(f) : inv.filler_c(f));
    }
  }
  out.push_back(inv.core(rng->below(inv.num_core)));
  return out;
}

corpus::NormalizedText sample_corpus(const WordInventory& inv, bool general,
                                     int sentences, double cross_leak, Rng* rng) {
  corpus::NormalizedText text;
  for (int s = 0; s < sentences; ++s) {
    bool dom = general;
    if (rng->uniform() < cross_leak) dom = !dom;
    std::vector<std::string> sent;
    for (size_t w : sample_sentence(inv, dom, rng)) sent.push_back(inv.words[w]);
    text.sentences.push_back(std::move(sent));
  }
  return text;
}

void write_text(const corpus::NormalizedText& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& sent : text.sentences) out << join(sent, " ") << '\n';
}

acoustic::GmmState word_state(const WordInventory& inv, size_t w) {
  acoustic::GmmState st;
  st.weights = {1.0};
  st.means = {inv.protos[w]};
  st.vars = {std::vector<double>(inv.protos[w].size(), 1.0)};
  return st;
}

double word_am_score(const WordInventory& inv, size_t candidate,
                     const std::vector<std::vector<double>>& frames) {
  acoustic::GmmState st = word_state(inv, candidate);
  double total = 0.0;
  for (const auto& f : frames) total += acoustic::gmm_emission_loglike(st, f);
  return total;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

FixtureInfo make_fixture(const FixtureOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.out_dir.empty()) throw Error("make_fixture: out_dir required");
  fs::create_directories(opts.out_dir);
  Rng rng(opts.seed);
  WordInventory inv = build_inventory(&rng, opts.dim, opts.cluster_spread);

  FixtureInfo info;
  auto path = [&](const char* name) { return (fs::path(opts.out_dir) / name).string(); };

  // Training and dev text, with a small cross-domain leak so both LMs know
  // the full vocabulary.
  auto general_train = sample_corpus(inv, true, opts.train_sentences, 0.02, &rng);
  auto conv_train = sample_corpus(inv, false, opts.train_sentences, 0.02, &rng);
  auto general_dev = sample_corpus(inv, true, opts.dev_sentences, 0.0, &rng);
  auto conv_dev = sample_corpus(inv, false, opts.dev_sentences, 0.0, &rng);
  corpus::NormalizedText mixed_dev;
  for (int s = 0; s < opts.dev_sentences; ++s) {
    bool general = rng.uniform() < 0.5;
    std::vector<std::string> sent;
    for (size_t w : sample_sentence(inv, general, &rng)) sent.push_back(inv.words[w]);
    mixed_dev.sentences.push_back(std::move(sent));
  }
  info.general_corpus = path("general.txt");
  info.conversation_corpus = path("conversation.txt");
  info.general_dev = path("dev_general.txt");
  info.conversation_dev = path("dev_conversation.txt");
  info.mixed_dev = path("dev_mixed.txt");
  write_text(general_train, info.general_corpus);
  write_text(conv_train, info.conversation_corpus);
  write_text(general_dev, info.general_dev);
  write_text(conv_dev, info.conversation_dev);
  write_text(mixed_dev, info.mixed_dev);

  // First-pass LM: equal-weight static merge of the two domain models,
  // entropy-pruned to a small size.
  auto counts_g = ngram::count_ngrams(general_train, opts.first_pass_order);
  auto counts_c = ngram::count_ngrams(conv_train, opts.first_pass_order);
  auto lm_g = ngram::train_mkn(counts_g);
  auto lm_c = ngram::train_mkn(counts_c);
  mix::MixtureModel fp_mix{{&lm_g, &lm_c}, mix::MixtureWeights{{0.5, 0.5}}};
  auto first_pass = mix::merge_static(fp_mix);
  first_pass = ngram::prune_entropy(first_pass, 1e-7);

  // Planted references and confusion lattices.
  score::Transcripts refs;
  std::vector<lat::Lattice> lats;
  for (int u = 0; u < opts.num_utterances; ++u) {
    bool general = (u % 2 == 0);
    std::vector<size_t> truth = sample_sentence(inv, general, &rng);
    std::string utt = strprintf("utt%04d", u);
    std::vector<std::string> ref_words;
    for (size_t w : truth) ref_words.push_back(inv.words[w]);
    refs.emplace(utt, ref_words);

    lat::Lattice lattice;
    lattice.utt_id = utt;
    lattice.num_nodes = static_cast<uint32_t>(truth.size() + 1);
    for (size_t j = 0; j < truth.size(); ++j) {
      size_t true_word = truth[j];
      // Observation frames for the spoken word.
      std::vector<std::vector<double>> frames(2, std::vector<double>(opts.dim));
      for (auto& f : frames)
        for (int d = 0; d < opts.dim; ++d)
          f[d] = inv.protos[true_word][d] + rng.normal(0.0, opts.noise);

      // Candidate set: cluster slots expand to every member, others get an
      // occasional random competitor.
      std::set<size_t> candidates{true_word};
      size_t base = inv.num_core + inv.num_clusters;
      if (true_word >= base && true_word < base + 3 * inv.num_clusters) {
        size_t k = (true_word - base) / 3;
        for (size_t m = 0; m < 3; ++m) candidates.insert(inv.cluster(k, m));
      } else if (rng.uniform() < 0.3) {
        candidates.insert(rng.below(inv.total()));
      }
      for (size_t cand : candidates) {
        lat::Arc a;
        a.from = static_cast<uint32_t>(j);
        a.to = static_cast<uint32_t>(j + 1);
        a.word = inv.words[cand];
        a.am = round6(word_am_score(inv, cand, frames));
        a.lm = 0.0;
        lattice.arcs.push_back(std::move(a));
      }
      if (rng.uniform() < 0.06) {
        // Skip arc: a deletion hypothesis, acoustically penalized.
        double worst = 0.0;
        for (const auto& arc : lattice.arcs)
          if (arc.from == j) worst = std::min(worst, arc.am);
        lat::Arc eps;
        eps.from = static_cast<uint32_t>(j);
        eps.to = static_cast<uint32_t>(j + 1);
        eps.word = lat::kEpsilon;
        eps.am = round6(worst - 4.0);
        eps.lm = 0.0;
        lattice.arcs.push_back(std::move(eps));
      }
    }
    lattice.finals.push_back(lattice.num_nodes - 1);
    lattice.validate();
    // First-pass LM scores (also expands nodes to unique LM histories).
    lat::Lattice scored = lat::rescore(lattice, first_pass);
    for (auto& a : scored.arcs) {
      a.am = round6(a.am);
      a.lm = round6(a.lm);
    }
    lats.push_back(std::move(scored));
  }
  info.refs = path("refs.tsv");
  score::write_transcripts(refs, info.refs);
  info.lattices = path("lattices.lat");
  lat::write_lattice_file(lats, info.lattices);
  info.num_utterances = opts.num_utterances;

  // Acoustic fixtures for golden tests: a few word GMMs and scored frames.
  {
    std::ofstream gmm(path("gmm_states.tsv"), std::ios::binary);
    std::ofstream frames_out(path("frames.tsv"), std::ios::binary);
    if (!gmm || !frames_out) throw Error("make_fixture: cannot write acoustic fixtures");
    gmm << "state\tcomponent\tweight\tmean\tvar\n";
    frames_out << "state\tobservation\tloglike\n";
    for (size_t w = 0; w < 4; ++w) {
      acoustic::GmmState st = word_state(inv, w);
      std::vector<std::string> mean_s, var_s;
      for (int d = 0; d < opts.dim; ++d) {
        mean_s.push_back(strprintf("%.6f", st.means[0][d]));
        var_s.push_back(strprintf("%.6f", st.vars[0][d]));
      }
      gmm << w << "\t0\t1.000000\t" << join(mean_s, ",") << "\t" << join(var_s, ",")
          << "\n";
      std::vector<double> obs(opts.dim);
      std::vector<std::string> obs_s;
      for (int d = 0; d < opts.dim; ++d) {
        obs[d] = round6(inv.protos[w][d] + rng.normal(0.0, opts.noise));
        obs_s.push_back(strprintf("%.6f", obs[d]));
      }
      frames_out << w << "\t" << join(obs_s, ",") << "\t"
                 << strprintf("%.8f", acoustic::gmm_emission_loglike(st, obs)) << "\n";
    }
  }
  info.gmm_states = path("gmm_states.tsv");
  info.frames = path("frames.tsv");
  return info;
}

corpus::NormalizedText synthesize_text(uint64_t seed, int sentences, int vocab_size) {
  if (vocab_size < 10) throw Error("synthesize_text: vocab too small");
  Rng rng(seed);
  auto words = make_words(static_cast<size_t>(vocab_size));
  // Zipf-shaped unigram weights.
  std::vector<double> base(words.size());
  for (size_t r = 0; r < words.size(); ++r)
    base[r] = 1.0 / std::pow(static_cast<double>(r + 2), 0.9);
  // Each word strongly prefers a fixed pair of followers, so bigrams carry
  // most of the information and higher orders are largely redundant, the
  // way collocation-heavy natural text behaves.  The structure depends only
  // on the vocabulary size; different seeds are different samples from the
  // same language.
  std::vector<std::vector<size_t>> followers(words.size());
  for (size_t w = 0; w < words.size(); ++w) {
    Rng local(0xC0FFEEull + 0x5bd1e995ull * (w + 1) + words.size());
    for (int i = 0; i < 2; ++i) followers[w].push_back(local.below(words.size()));
  }
  corpus::NormalizedText text;
  for (int s = 0; s < sentences; ++s) {
    size_t len = 8 + rng.below(13);
    std::vector<std::string> sent;
    size_t prev = rng.categorical(base);
    sent.push_back(words[prev]);
    for (size_t i = 1; i < len; ++i) {
      size_t next;
      if (rng.uniform() < 0.85)
        next = followers[prev][rng.below(followers[prev].size())];
      else
        next = rng.categorical(base);
      sent.push_back(words[next]);
      prev = next;
    }
    text.sentences.push_back(std::move(sent));
  }
  return text;
}

}  // namespace lmcomb::fixture
