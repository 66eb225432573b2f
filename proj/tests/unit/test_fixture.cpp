#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lmcomb/acoustic.hpp"
#include "lmcomb/combine.hpp"
#include "lmcomb/fixture.hpp"
#include "lmcomb/lattice.hpp"
#include "lmcomb/score.hpp"
#include "lmcomb/util.hpp"

using namespace lmcomb;
namespace fs = std::filesystem;

namespace {

fixture::FixtureInfo small_fixture(const char* tag) {
  fixture::FixtureOptions opts;
  opts.out_dir = (fs::temp_directory_path() / tag).string();
  fs::remove_all(opts.out_dir);
  opts.num_utterances = 30;
  opts.train_sentences = 800;
  opts.dev_sentences = 60;
  return fixture::make_fixture(opts);
}

}  // namespace

TEST_CASE("make-fixture writes a consistent experiment") {
  auto info = small_fixture("lmcomb_fixture_unit");
  auto lats = lat::parse_lattice_file(info.lattices);
  auto refs = score::read_transcripts(info.refs);
  REQUIRE(lats.size() == 30);
  REQUIRE(refs.size() == 30);
  for (const auto& l : lats) {
    CHECK(refs.count(l.utt_id) == 1);
    // The planted reference is readable from the lattice.
    auto nb = lat::nbest(l, 8.0, 1u << 20);
    bool found = false;
    for (const auto& h : nb.hyps)
      if (h.words == refs.at(l.utt_id)) found = true;
    CHECK(found);
  }
  CHECK(read_lines(info.general_corpus).size() == 800);
  CHECK(read_lines(info.mixed_dev).size() == 60);
}

TEST_CASE("make-fixture is byte-reproducible for a fixed seed") {
  auto a = small_fixture("lmcomb_fixture_rep_a");
  auto b = small_fixture("lmcomb_fixture_rep_b");
  CHECK(read_lines(a.general_corpus) == read_lines(b.general_corpus));
  CHECK(read_lines(a.lattices) == read_lines(b.lattices));
  CHECK(read_lines(a.refs) == read_lines(b.refs));
}

TEST_CASE("acoustic golden fixtures recompute") {
  auto info = small_fixture("lmcomb_fixture_golden");
  // gmm_states.tsv: state, component, weight, mean, var.  frames.tsv holds
  // scored observations for the same states.
  std::map<int, acoustic::GmmState> states;
  auto gmm_lines = read_lines(info.gmm_states);
  for (size_t i = 1; i < gmm_lines.size(); ++i) {
    auto f = split_on(gmm_lines[i], '\t');
    REQUIRE(f.size() == 5);
    acoustic::GmmState st;
    st.weights = {std::strtod(f[2].c_str(), nullptr)};
    std::vector<double> mean, var;
    for (const auto& x : split_on(f[3], ',')) mean.push_back(std::strtod(x.c_str(), nullptr));
    for (const auto& x : split_on(f[4], ',')) var.push_back(std::strtod(x.c_str(), nullptr));
    st.means = {mean};
    st.vars = {var};
    states[std::atoi(f[0].c_str())] = st;
  }
  auto frame_lines = read_lines(info.frames);
  REQUIRE(frame_lines.size() > 1);
  for (size_t i = 1; i < frame_lines.size(); ++i) {
    auto f = split_on(frame_lines[i], '\t');
    REQUIRE(f.size() == 3);
    std::vector<double> obs;
    for (const auto& x : split_on(f[1], ',')) obs.push_back(std::strtod(x.c_str(), nullptr));
    double want = std::strtod(f[2].c_str(), nullptr);
    double got = acoustic::gmm_emission_loglike(states.at(std::atoi(f[0].c_str())), obs);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("sweep: with noise LM scores, WER does not improve past the optimum") {
  // Lattices whose lm scores are uninformative noise: raising the LM weight
  // amplifies noise against informative acoustics, so WER is non-decreasing
  // in lmwt beyond the (smallest-weight) optimum.  Checked exhaustively on
  // the synthetic fixture by direct evaluation at every grid point.
  Rng rng(2025);
  score::Transcripts refs;
  std::vector<lat::Lattice> lats;
  for (int u = 0; u < 150; ++u) {
    std::string id = strprintf("n%03d", u);
    lat::Lattice l;
    l.utt_id = id;
    int len = 6 + static_cast<int>(rng.below(5));
    l.num_nodes = static_cast<uint32_t>(len + 1);
    std::vector<std::string> truth;
    for (int j = 0; j < len; ++j) {
      std::string w = "w" + std::to_string(rng.below(30));
      truth.push_back(w);
      for (int cand = 0; cand < 3; ++cand) {
        lat::Arc a;
        a.from = j;
        a.to = j + 1;
        a.word = cand == 0 ? w : "w" + std::to_string(rng.below(30));
        a.am = (cand == 0 ? 0.0 : -1.5) + rng.normal(0.0, 0.3);  // truth favored
        a.lm = rng.uniform(-3.0, 0.0);                           // pure noise
        l.arcs.push_back(std::move(a));
      }
    }
    l.finals.push_back(l.num_nodes - 1);
    l.validate();
    refs.emplace(id, truth);
    lats.push_back(std::move(l));
  }
  std::vector<double> lmwts{0.1, 0.5, 2.0, 8.0, 32.0};
  auto sweep = combine::single_system_sweep(
      [&](double lmwt) {
        score::Transcripts hyps;
        for (const auto& l : lats) hyps[l.utt_id] = lat::best_path(l, lmwt).words;
        return hyps;
      },
      refs, lmwts);
  CHECK(sweep.rows[sweep.best].lmwt == 0.1);
  for (size_t i = 1; i < sweep.rows.size(); ++i)
    CHECK(sweep.rows[i].wer_percent >= sweep.rows[i - 1].wer_percent);
}

TEST_CASE("corpus_wer is identical across thread counts") {
  Rng rng(77);
  score::Transcripts refs, hyps;
  for (int u = 0; u < 40; ++u) {
    std::string id = strprintf("t%03d", u);
    std::vector<std::string> r, h;
    for (int i = 0; i < 10; ++i) {
      r.push_back("x" + std::to_string(rng.below(6)));
      h.push_back("x" + std::to_string(rng.below(6)));
    }
    refs[id] = r;
    hyps[id] = h;
  }
  auto serial = score::corpus_wer(refs, hyps, 1);
  auto parallel = score::corpus_wer(refs, hyps, 8);
  CHECK(serial.total.substitutions == parallel.total.substitutions);
  CHECK(serial.total.insertions == parallel.total.insertions);
  CHECK(serial.total.deletions == parallel.total.deletions);
  CHECK(serial.per_utt == parallel.per_utt);
}
