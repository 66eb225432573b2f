#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lmcomb/acoustic.hpp"
#include "lmcomb/combine.hpp"
#include "lmcomb/corpus.hpp"
#include "lmcomb/fixture.hpp"
#include "lmcomb/lattice.hpp"
#include "lmcomb/mix.hpp"
#include "lmcomb/ngram.hpp"
#include "lmcomb/score.hpp"

namespace py = pybind11;
using namespace lmcomb;

namespace {

corpus::Rules rules_from_list(const std::vector<std::string>& names) {
  corpus::Rules rules;
  for (const auto& name : names) {
    if (name == "tones") rules.tones = true;
    else if (name == "numbers") rules.numbers = true;
    else if (name == "dates") rules.dates = true;
    else throw Error("unknown rule '" + name + "'");
  }
  return rules;
}

corpus::NormalizedText text_from_sentences(const std::vector<std::vector<std::string>>& s) {
  corpus::NormalizedText t;
  t.sentences = s;
  return t;
}

std::vector<const ngram::ArpaModel*> model_ptrs(const std::vector<ngram::ArpaModel*>& in) {
  std::vector<const ngram::ArpaModel*> out;
  out.reserve(in.size());
  for (auto* m : in) out.push_back(m);
  return out;
}

mix::MixtureModel make_mixture(const std::vector<ngram::ArpaModel*>& models,
                               const std::vector<double>& weights) {
  mix::MixtureModel mm;
  mm.components = model_ptrs(models);
  mm.weights.lambda = weights;
  mm.weights.validate();
  return mm;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "n-gram LM training, interpolation, lattice rescoring and "
            "two-system combination";

  py::register_exception<Error>(m, "LmcombError");

  // ---- corpus ----
  m.def(
      "normalize_text",
      [](const std::vector<std::string>& lines, const std::vector<std::string>& rules) {
        return corpus::normalize_text(lines, rules_from_list(rules)).sentences;
      },
      py::arg("lines"), py::arg("rules") = std::vector<std::string>{"tones", "numbers", "dates"},
      "Clean, tokenize and sentence-split raw text; returns token lists.");
  m.def("fix_tone_placement", &corpus::fix_tone_placement, py::arg("token"));
  m.def(
      "verbalize_integer",
      [](uint64_t v) { return corpus::verbalize_integer(v); }, py::arg("value"));
  m.def("format_thousands", &corpus::format_thousands, py::arg("n"));

  // ---- ngram ----
  py::class_<ngram::PerplexityResult>(m, "PerplexityResult")
      .def_readonly("ppl", &ngram::PerplexityResult::ppl)
      .def_readonly("log10prob", &ngram::PerplexityResult::total_log10)
      .def_readonly("events", &ngram::PerplexityResult::events)
      .def_readonly("oov_count", &ngram::PerplexityResult::oov_count)
      .def("__repr__", [](const ngram::PerplexityResult& r) {
        return strprintf("PerplexityResult(ppl=%.6f, events=%llu, oov=%llu)", r.ppl,
                         static_cast<unsigned long long>(r.events),
                         static_cast<unsigned long long>(r.oov_count));
      });

  py::class_<ngram::ArpaModel>(m, "ArpaModel")
      .def_property_readonly("order", &ngram::ArpaModel::order)
      .def_property_readonly("vocab_size",
                             [](const ngram::ArpaModel& m_) { return m_.vocab().size(); })
      .def("entry_count", &ngram::ArpaModel::entry_count, py::arg("order"))
      .def("total_entries", &ngram::ArpaModel::total_entries)
      .def(
          "logprob",
          [](const ngram::ArpaModel& m_, const std::vector<std::string>& history,
             const std::string& word) { return m_.logprob(history, word); },
          py::arg("history"), py::arg("word"),
          "log10 probability with backoff; OOV words map to <unk>.")
      .def(
          "perplexity",
          [](const ngram::ArpaModel& m_, const std::vector<std::vector<std::string>>& s) {
            return ngram::perplexity(m_, text_from_sentences(s));
          },
          py::arg("sentences"))
      .def(
          "prune",
          [](const ngram::ArpaModel& m_, double threshold) {
            return ngram::prune_entropy(m_, threshold);
          },
          py::arg("threshold"), "Relative-entropy pruning; returns a new model.")
      .def("normalization_error", &ngram::max_normalization_error,
           "max |1 - sum_w p(w|h)| over stored histories (small vocabs only)")
      .def("write", &ngram::write_arpa_file, py::arg("path"))
      .def_static("read", &ngram::read_arpa_file, py::arg("path"));

  m.def(
      "train",
      [](const std::vector<std::vector<std::string>>& sentences, int order,
         uint64_t unk_cutoff, const std::vector<uint64_t>& cutoffs, double unk_floor) {
        ngram::CountOptions copts;
        copts.unk_cutoff = unk_cutoff;
        ngram::TrainOptions topts;
        topts.count_cutoffs = cutoffs;
        topts.unk_floor = unk_floor;
        return ngram::train_mkn(
            ngram::count_ngrams(text_from_sentences(sentences), order, copts), topts);
      },
      py::arg("sentences"), py::arg("order") = 3, py::arg("unk_cutoff") = 0,
      py::arg("cutoffs") = std::vector<uint64_t>{}, py::arg("unk_floor") = 0.0,
      "Count n-grams and train an interpolated modified Kneser-Ney model.");

  // ---- mix ----
  m.def(
      "estimate_weights_em",
      [](const std::vector<ngram::ArpaModel*>& models,
         const std::vector<std::vector<std::string>>& dev, int max_iters, double tol,
         double weight_floor) {
        mix::EmOptions opts;
        opts.max_iters = max_iters;
        opts.tol = tol;
        opts.weight_floor = weight_floor;
        auto r = mix::estimate_weights_em(model_ptrs(models), text_from_sentences(dev), opts);
        return py::make_tuple(r.weights.lambda, r.ppl_trace);
      },
      py::arg("models"), py::arg("dev_sentences"), py::arg("max_iters") = 100,
      py::arg("tol") = 1e-4, py::arg("weight_floor") = 1e-4,
      "EM interpolation weights; returns (weights, per-iteration dev PPL).");
  m.def(
      "mixture_logprob",
      [](const std::vector<ngram::ArpaModel*>& models, const std::vector<double>& weights,
         const std::vector<std::string>& history, const std::string& word) {
        return mix::mixture_logprob(make_mixture(models, weights), history, word);
      },
      py::arg("models"), py::arg("weights"), py::arg("history"), py::arg("word"));
  m.def(
      "merge_static",
      [](const std::vector<ngram::ArpaModel*>& models, const std::vector<double>& weights) {
        return mix::merge_static(make_mixture(models, weights));
      },
      py::arg("models"), py::arg("weights"),
      "Fold a weighted mixture into one backoff model.");
  m.def(
      "rank_by_perplexity",
      [](const std::vector<ngram::ArpaModel*>& models,
         const std::vector<std::vector<std::string>>& dev) {
        std::vector<std::pair<size_t, double>> out;
        for (const auto& r :
             mix::rank_by_perplexity(model_ptrs(models), text_from_sentences(dev)))
          out.push_back({r.index, r.ppl});
        return out;
      },
      py::arg("models"), py::arg("dev_sentences"));

  // ---- acoustic ----
  m.def(
      "gmm_emission_loglike",
      [](const std::vector<double>& weights, const std::vector<std::vector<double>>& means,
         const std::vector<std::vector<double>>& vars, const std::vector<double>& obs) {
        acoustic::GmmState st{weights, means, vars};
        return acoustic::gmm_emission_loglike(st, obs);
      },
      py::arg("weights"), py::arg("means"), py::arg("vars"), py::arg("obs"));
  m.def(
      "pseudo_loglike",
      [](const std::vector<std::vector<double>>& posteriors,
         const std::vector<double>& priors, size_t state, size_t frame) {
        acoustic::DnnPosteriors p{posteriors};
        acoustic::StatePriors q{priors};
        return acoustic::pseudo_loglike(p, q, state, frame);
      },
      py::arg("posteriors"), py::arg("priors"), py::arg("state"), py::arg("frame"));
  m.def(
      "estimate_priors",
      [](const std::vector<uint32_t>& alignment, size_t num_states) {
        return acoustic::estimate_priors(alignment, num_states).priors;
      },
      py::arg("alignment"), py::arg("num_states"));

  // ---- lattice ----
  py::class_<lat::ScoredPath>(m, "ScoredPath")
      .def_readonly("words", &lat::ScoredPath::words)
      .def_readonly("am", &lat::ScoredPath::am)
      .def_readonly("lm", &lat::ScoredPath::lm)
      .def_readonly("combined", &lat::ScoredPath::combined);

  py::class_<lat::Hypothesis>(m, "Hypothesis")
      .def_readonly("words", &lat::Hypothesis::words)
      .def_readonly("combined", &lat::Hypothesis::combined)
      .def_readonly("posterior", &lat::Hypothesis::posterior);

  py::class_<lat::Lattice>(m, "Lattice")
      .def_readonly("utt_id", &lat::Lattice::utt_id)
      .def_readonly("num_nodes", &lat::Lattice::num_nodes)
      .def_property_readonly("num_arcs",
                             [](const lat::Lattice& l) { return l.arcs.size(); })
      .def(
          "best_path",
          [](const lat::Lattice& l, double lmwt, double wip) {
            return lat::best_path(l, lmwt, wip);
          },
          py::arg("lmwt"), py::arg("wip") = 0.0)
      .def(
          "nbest",
          [](const lat::Lattice& l, double lmwt, size_t k) {
            return lat::nbest(l, lmwt, k).hyps;
          },
          py::arg("lmwt"), py::arg("k"))
      .def(
          "arc_posteriors",
          [](const lat::Lattice& l, double lmwt) { return lat::arc_posteriors(l, lmwt); },
          py::arg("lmwt"))
      .def(
          "rescore",
          [](const lat::Lattice& l, const ngram::ArpaModel& model) {
            return lat::rescore(l, model);
          },
          py::arg("model"), "Replace LM scores with a second-pass model.");

  m.def("read_lattices", &lat::parse_lattice_file, py::arg("path"));
  m.def("write_lattices", &lat::write_lattice_file, py::arg("lattices"), py::arg("path"));

  // ---- score ----
  py::class_<score::WerResult>(m, "WerResult")
      .def_readonly("substitutions", &score::WerResult::substitutions)
      .def_readonly("insertions", &score::WerResult::insertions)
      .def_readonly("deletions", &score::WerResult::deletions)
      .def_readonly("ref_words", &score::WerResult::ref_words)
      .def_property_readonly("errors", &score::WerResult::errors)
      .def_property_readonly("wer", &score::WerResult::wer)
      .def_property_readonly("wer_percent", &score::WerResult::wer_percent)
      .def("__repr__", [](const score::WerResult& r) {
        return strprintf("WerResult(%.2f%%, sub=%llu ins=%llu del=%llu / %llu)",
                         r.wer_percent(),
                         static_cast<unsigned long long>(r.substitutions),
                         static_cast<unsigned long long>(r.insertions),
                         static_cast<unsigned long long>(r.deletions),
                         static_cast<unsigned long long>(r.ref_words));
      });

  m.def("align_wer", &score::align_wer, py::arg("ref"), py::arg("hyp"));
  m.def(
      "corpus_wer",
      [](const score::Transcripts& refs, const score::Transcripts& hyps) {
        auto r = score::corpus_wer(refs, hyps);
        return py::make_tuple(r.total, r.per_utt);
      },
      py::arg("refs"), py::arg("hyps"),
      "Pooled WER plus per-utterance breakdown; ids must match.");

  // ---- combine ----
  m.def(
      "combine_nbest",
      [](const std::map<std::string, std::vector<std::pair<std::vector<std::string>, double>>>& a,
         const std::map<std::string, std::vector<std::pair<std::vector<std::string>, double>>>& b,
         double w_general, double w_conversation, double lmwt) {
        auto to_system = [](const auto& side) {
          combine::SystemOutput sys;
          for (const auto& [utt, hyps] : side) {
            lat::NBestList nb;
            nb.utt_id = utt;
            for (const auto& [words, posterior] : hyps) {
              lat::Hypothesis h;
              h.words = words;
              h.posterior = posterior;
              nb.hyps.push_back(std::move(h));
            }
            sys.utts.emplace(utt, std::move(nb));
          }
          return sys;
        };
        combine::CombinationConfig cfg{lmwt, w_general, w_conversation};
        return combine::combine_systems(to_system(a), to_system(b), cfg);
      },
      py::arg("system_a"), py::arg("system_b"), py::arg("w_general"),
      py::arg("w_conversation"), py::arg("lmwt") = 8.0,
      "Posterior-interpolation combination over {utt: [(words, posterior)]}.");

  py::class_<combine::GridRow>(m, "GridRow")
      .def(py::init([](double lmwt, double wg, double wc, double wer) {
             return combine::GridRow{lmwt, wg, wc, wer};
           }),
           py::arg("lmwt"), py::arg("w_general"), py::arg("w_conversation"),
           py::arg("wer_percent"))
      .def_readonly("lmwt", &combine::GridRow::lmwt)
      .def_readonly("w_general", &combine::GridRow::w_general)
      .def_readonly("w_conversation", &combine::GridRow::w_conversation)
      .def_readonly("wer_percent", &combine::GridRow::wer_percent);

  m.def(
      "select_best_grid",
      [](const std::vector<combine::GridRow>& rows) {
        auto r = combine::select_best(rows);
        return py::make_tuple(r.best, r.rows[r.best]);
      },
      py::arg("rows"), "Minimum-WER row; ties to lower lmwt, then higher general ratio.");

  // ---- fixture ----
  m.def(
      "make_fixture",
      [](const std::string& out_dir, uint64_t seed, int utterances, int train_sentences) {
        fixture::FixtureOptions opts;
        opts.out_dir = out_dir;
        opts.seed = seed;
        opts.num_utterances = utterances;
        opts.train_sentences = train_sentences;
        auto info = fixture::make_fixture(opts);
        py::dict d;
        d["general_corpus"] = info.general_corpus;
        d["conversation_corpus"] = info.conversation_corpus;
        d["mixed_dev"] = info.mixed_dev;
        d["refs"] = info.refs;
        d["lattices"] = info.lattices;
        d["num_utterances"] = info.num_utterances;
        return d;
      },
      py::arg("out_dir"), py::arg("seed") = 9, py::arg("utterances") = 120,
      py::arg("train_sentences") = 4000,
      "Synthetic two-domain decoding experiment; returns the written paths.");
  m.def(
      "synthesize_text",
      [](uint64_t seed, int sentences, int vocab_size) {
        return fixture::synthesize_text(seed, sentences, vocab_size).sentences;
      },
      py::arg("seed"), py::arg("sentences"), py::arg("vocab_size"));
}
