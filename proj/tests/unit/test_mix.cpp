#include <doctest.h>

#include <cmath>

#include "lmcomb/fixture.hpp"
#include "lmcomb/mix.hpp"
#include "support/oracles.hpp"

using namespace lmcomb;
using mix::MixtureModel;
using mix::MixtureWeights;
using ngram::ArpaModel;
using ngram::Key;
using ngram::Vocabulary;

namespace {

corpus::NormalizedText text_of(std::initializer_list<std::vector<std::string>> sents) {
  corpus::NormalizedText t;
  for (const auto& s : sents) t.sentences.push_back(s);
  return t;
}

// Unigram model with explicit probabilities; remaining mass goes to <unk>
// and </s>.
ArpaModel unigram_model(const std::vector<std::pair<std::string, double>>& probs) {
  ArpaModel m(1, Vocabulary());
  double used = 0.0;
  for (const auto& [w, p] : probs) {
    m.vocab().add(w);
    used += p;
  }
  double rest = 1.0 - used;
  const double eos = rest / 2, unk = rest / 2;
  for (const auto& [w, p] : probs)
    m.entries(1).emplace(Key{*m.vocab().find(w)}, ngram::Prob{std::log10(p), 0.0});
  m.entries(1).emplace(Key{Vocabulary::kBos}, ngram::Prob{kLog10Zero, 0.0});
  m.entries(1).emplace(Key{Vocabulary::kEos}, ngram::Prob{std::log10(eos), 0.0});
  m.entries(1).emplace(Key{Vocabulary::kUnk}, ngram::Prob{std::log10(unk), 0.0});
  return m;
}

}  // namespace

TEST_CASE("EM: identical components stay at uniform weights") {
  auto text = fixture::synthesize_text(101, 200, 30);
  auto model = ngram::train_mkn(ngram::count_ngrams(text, 2));
  auto dev = fixture::synthesize_text(102, 50, 30);
  auto r = mix::estimate_weights_em({&model, &model}, dev);
  CHECK(r.weights.lambda[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.weights.lambda[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("EM: in-domain component takes nearly all the weight") {
  // Component A trained on the dev text itself; component B on a corpus
  // with a disjoint content vocabulary.
  auto text_a = text_of({{"xin", "chào", "bạn"}, {"xin", "chào"}, {"bạn", "xin"}});
  auto text_b = text_of({{"mot", "hai", "ba"}, {"ba", "hai"}, {"mot", "ba"}});
  auto lm_a = ngram::train_mkn(ngram::count_ngrams(text_a, 2));
  auto lm_b = ngram::train_mkn(ngram::count_ngrams(text_b, 2));
  auto r = mix::estimate_weights_em({&lm_a, &lm_b}, text_a);
  CHECK(r.weights.lambda[0] > 0.9);
}

TEST_CASE("EM: dev perplexity trace is monotone non-increasing") {
  auto t1 = fixture::synthesize_text(111, 400, 40);
  auto t2 = fixture::synthesize_text(112, 400, 40);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 2));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 2));
  auto dev = fixture::synthesize_text(113, 80, 40);
  auto r = mix::estimate_weights_em({&lm1, &lm2}, dev);
  REQUIRE(r.ppl_trace.size() >= 2);
  for (size_t i = 1; i < r.ppl_trace.size(); ++i)
    CHECK(r.ppl_trace[i] <= r.ppl_trace[i - 1] + 1e-12);
  double sum = 0.0;
  for (double l : r.weights.lambda) {
    CHECK(l >= 0.0);
    sum += l;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("EM: planted 0.7/0.3 mixture is recovered near the grid oracle") {
  auto comp_a = unigram_model({{"a", 0.6}, {"b", 0.1}, {"c", 0.1}});
  auto comp_b = unigram_model({{"a", 0.1}, {"b", 0.5}, {"c", 0.2}});
  // Sample dev tokens from the 0.7/0.3 blend of the two unigram models.
  Rng rng(1234);
  std::vector<std::string> words{"a", "b", "c"};
  std::vector<double> pa{0.6, 0.1, 0.1}, pb{0.1, 0.5, 0.2};
  corpus::NormalizedText dev;
  std::vector<std::string> sent;
  for (int i = 0; i < 10000; ++i) {
    const auto& p = rng.uniform() < 0.7 ? pa : pb;
    sent.push_back(words[rng.categorical(p)]);
    if (sent.size() == 20) {
      dev.sentences.push_back(sent);
      sent.clear();
    }
  }
  mix::EmOptions opts;
  opts.tol = 1e-7;
  opts.max_iters = 200;
  auto r = mix::estimate_weights_em({&comp_a, &comp_b}, dev, opts);

  // Independent oracle: grid search over lambda at 0.01 resolution.
  std::vector<std::pair<double, double>> event_probs;
  for (const auto& s : dev.sentences) {
    std::vector<std::string> ctx{"<s>"};
    for (const auto& w : s) {
      event_probs.push_back({std::pow(10.0, comp_a.logprob(ctx, w)),
                             std::pow(10.0, comp_b.logprob(ctx, w))});
      ctx.push_back(w);
    }
    event_probs.push_back({std::pow(10.0, comp_a.logprob(ctx, "</s>")),
                           std::pow(10.0, comp_b.logprob(ctx, "</s>"))});
  }
  double oracle_lambda = oracles::grid_search_lambda(event_probs);
  CHECK(std::abs(r.weights.lambda[0] - oracle_lambda) <= 0.05);
}

TEST_CASE("EM: fewer than two components is an error") {
  auto text = fixture::synthesize_text(121, 50, 20);
  auto lm = ngram::train_mkn(ngram::count_ngrams(text, 2));
  CHECK_THROWS_AS(mix::estimate_weights_em({&lm}, text), Error);
}

TEST_CASE("EM: a token with zero probability everywhere names itself") {
  // Hand-built model whose probabilities underflow to exact zero.
  ArpaModel dead(1, Vocabulary());
  dead.vocab().add("x");
  for (ngram::WordId w = 0; w < dead.vocab().size(); ++w)
    dead.entries(1).emplace(Key{w}, ngram::Prob{-400.0, 0.0});
  auto dev = text_of({{"x"}});
  CHECK_THROWS_WITH_AS(mix::estimate_weights_em({&dead, &dead}, dev),
                       doctest::Contains("'x'"), Error);
}

TEST_CASE("mixture_logprob: degenerate weights reduce to one component") {
  auto t1 = fixture::synthesize_text(131, 200, 30);
  auto t2 = fixture::synthesize_text(132, 200, 30);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 2));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 2));
  MixtureModel mm{{&lm1, &lm2}, MixtureWeights{{1.0, 0.0}}};
  std::vector<std::string> hist{"<s>"};
  for (const auto& w : {"ba", "chua", "nga"})
    CHECK(mix::mixture_logprob(mm, hist, w) ==
          doctest::Approx(lm1.logprob(hist, w)).epsilon(1e-12));
}

TEST_CASE("mixture_logprob: two-point arithmetic identity") {
  auto a = unigram_model({{"w", 0.1}});
  auto b = unigram_model({{"w", 0.001}});
  MixtureModel mm{{&a, &b}, MixtureWeights{{0.5, 0.5}}};
  CHECK(mix::mixture_logprob(mm, {}, "w") ==
        doctest::Approx(std::log10(0.0505)).epsilon(1e-12));
}

TEST_CASE("mixture_logprob is bounded below by each weighted component") {
  auto t1 = fixture::synthesize_text(141, 150, 25);
  auto t2 = fixture::synthesize_text(142, 150, 25);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 2));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 2));
  MixtureModel mm{{&lm1, &lm2}, MixtureWeights{{0.3, 0.7}}};
  Rng rng(7);
  std::vector<std::string> words{"ba", "ca", "da", "ga", "zzz"};
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> hist{words[rng.below(words.size())]};
    const auto& w = words[rng.below(words.size())];
    double lp = mix::mixture_logprob(mm, hist, w);
    CHECK(lp >= std::log10(0.3) + mix::component_logprob(mm, 0, hist, w) - 1e-12);
    CHECK(lp >= std::log10(0.7) + mix::component_logprob(mm, 1, hist, w) - 1e-12);
    // With a shared vocabulary the extended and plain probabilities agree.
    if (lm1.vocab().find(w) && w != "zzz")
      CHECK(mix::component_logprob(mm, 0, hist, w) ==
            doctest::Approx(lm1.logprob(hist, w)).epsilon(1e-12));
  }
}

TEST_CASE("EM: converged mixture is at least as good as the best component") {
  auto t1 = fixture::synthesize_text(151, 500, 40);
  auto t2 = fixture::synthesize_text(152, 500, 40);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 3));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 3));
  auto dev = fixture::synthesize_text(153, 100, 40);
  mix::EmOptions opts;
  opts.tol = 1e-6;
  opts.max_iters = 300;
  opts.weight_floor = 0.0;
  auto r = mix::estimate_weights_em({&lm1, &lm2}, dev, opts);
  MixtureModel mm{{&lm1, &lm2}, r.weights};
  double mixture_ppl = mix::mixture_perplexity(mm, dev);
  double best_single = std::min(ngram::perplexity(lm1, dev).ppl,
                                ngram::perplexity(lm2, dev).ppl);
  CHECK(mixture_ppl <= best_single + 1e-4);
}

TEST_CASE("rank_by_perplexity: on-domain component ranks first, ties by index") {
  auto t_news = fixture::synthesize_text(161, 400, 30);
  auto t_sport = fixture::synthesize_text(162, 400, 50);
  auto t_law = fixture::synthesize_text(163, 400, 70);
  auto lm_news = ngram::train_mkn(ngram::count_ngrams(t_news, 2));
  auto lm_sport = ngram::train_mkn(ngram::count_ngrams(t_sport, 2));
  auto lm_law = ngram::train_mkn(ngram::count_ngrams(t_law, 2));
  auto dev = fixture::synthesize_text(164, 60, 50);  // sport-language sample
  auto ranked = mix::rank_by_perplexity({&lm_news, &lm_sport, &lm_law}, dev);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].index == 1);
  CHECK(ranked[0].ppl <= ranked[1].ppl);
  CHECK(ranked[1].ppl <= ranked[2].ppl);

  auto single = mix::rank_by_perplexity({&lm_news}, dev);
  CHECK(single.size() == 1);

  auto tied = mix::rank_by_perplexity({&lm_news, &lm_news, &lm_news}, dev);
  CHECK(tied[0].index == 0);
  CHECK(tied[1].index == 1);
  CHECK(tied[2].index == 2);
}

TEST_CASE("merge_static: weight-one merge reproduces the component") {
  auto text = fixture::synthesize_text(171, 300, 30);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(text, 2));
  auto other = fixture::synthesize_text(172, 300, 30);
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(other, 2));
  MixtureModel mm{{&lm1, &lm2}, MixtureWeights{{1.0, 0.0}}};
  auto merged = mix::merge_static(mm);
  for (int k = 1; k <= 2; ++k) {
    for (const auto& [gram, prob] : lm1.entries(k)) {
      if (gram.back() == Vocabulary::kBos) continue;
      std::vector<std::string> words;
      for (auto id : gram) words.push_back(lm1.vocab().word(id));
      std::vector<std::string> hist(words.begin(), words.end() - 1);
      CHECK(merged.logprob(hist, words.back()) ==
            doctest::Approx(prob.logprob).epsilon(1e-9));
    }
  }
}

TEST_CASE("merge_static: merged entries equal the mixture exactly; model normalizes") {
  auto t1 = fixture::synthesize_text(181, 250, 25);
  auto t2 = fixture::synthesize_text(182, 250, 35);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 2));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 2));
  MixtureModel mm{{&lm1, &lm2}, MixtureWeights{{0.4, 0.6}}};
  auto merged = mix::merge_static(mm);
  for (int k = 1; k <= merged.order(); ++k) {
    for (const auto& [gram, prob] : merged.entries(k)) {
      if (gram.back() == Vocabulary::kBos) continue;
      std::vector<std::string> words;
      for (auto id : gram) words.push_back(merged.vocab().word(id));
      std::vector<std::string> hist(words.begin(), words.end() - 1);
      CHECK(prob.logprob ==
            doctest::Approx(mix::mixture_logprob(mm, hist, words.back())).epsilon(1e-12));
    }
  }
  CHECK(ngram::max_normalization_error(merged) < 1e-9);
}

TEST_CASE("merge_static: merged perplexity tracks the true mixture") {
  auto t1 = fixture::synthesize_text(191, 400, 30);
  auto t2 = fixture::synthesize_text(192, 400, 40);
  auto lm1 = ngram::train_mkn(ngram::count_ngrams(t1, 2));
  auto lm2 = ngram::train_mkn(ngram::count_ngrams(t2, 2));
  auto dev = fixture::synthesize_text(193, 80, 30);
  MixtureModel mm{{&lm1, &lm2}, MixtureWeights{{0.5, 0.5}}};
  auto merged = mix::merge_static(mm);
  double true_ppl = mix::mixture_perplexity(mm, dev);
  double merged_ppl = ngram::perplexity(merged, dev).ppl;
  CHECK(std::abs(merged_ppl - true_ppl) / true_ppl < 0.05);
}

TEST_CASE("weights file round-trip") {
  MixtureWeights w{{0.25, 0.75}};
  mix::write_weights_file("/tmp/lmcomb_weights_test.txt", {"a.arpa", "b.arpa"}, w, 123.456);
  auto wf = mix::read_weights_file("/tmp/lmcomb_weights_test.txt");
  REQUIRE(wf.component_paths.size() == 2);
  CHECK(wf.component_paths[0] == "a.arpa");
  CHECK(wf.weights.lambda[1] == doctest::Approx(0.75).epsilon(1e-9));
}
