// lmcomb: n-gram LM training, perplexity-weighted interpolation, lattice
// rescoring and two-system combination, as one subcommand-style binary.
// All intermediate artifacts are plain files; exit codes: 0 success,
// 1 data error, 2 usage error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "lmcomb/acoustic.hpp"
#include "lmcomb/combine.hpp"
#include "lmcomb/corpus.hpp"
#include "lmcomb/fixture.hpp"
#include "lmcomb/lattice.hpp"
#include "lmcomb/mix.hpp"
#include "lmcomb/ngram.hpp"
#include "lmcomb/score.hpp"
#include "lmcomb/util.hpp"

namespace fs = std::filesystem;
using namespace lmcomb;

namespace {

corpus::Rules parse_rules(const std::string& spec) {
  corpus::Rules rules;
  if (spec.empty()) return rules;
  for (const auto& name : split_on(spec, ',')) {
    if (name == "tones") rules.tones = true;
    else if (name == "numbers") rules.numbers = true;
    else if (name == "dates") rules.dates = true;
    else if (name == "all") rules = corpus::Rules::all();
    else if (name == "none") rules = corpus::Rules::none();
    else throw Error("unknown rule '" + name + "' (expected tones,numbers,dates)");
  }
  return rules;
}

// Input already normalized to one sentence per line.
corpus::NormalizedText read_tokenized(const std::vector<std::string>& paths) {
  corpus::NormalizedText text;
  for (const auto& path : paths)
    for (const auto& line : read_lines(path)) {
      auto tokens = split_whitespace(line);
      if (!tokens.empty()) text.sentences.push_back(std::move(tokens));
    }
  return text;
}

void write_sentences(const corpus::NormalizedText& text, std::ostream& out) {
  for (const auto& sent : text.sentences) out << join(sent, " ") << '\n';
}

std::vector<lat::Lattice> load_lattices(const std::string& path) {
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".lat")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(path + ": no .lat files");
    std::vector<lat::Lattice> all;
    for (const auto& f : files) {
      auto part = lat::parse_lattice_file(f);
      all.insert(all.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    return all;
  }
  return lat::parse_lattice_file(path);
}

std::vector<double> parse_double_list(const std::string& spec) {
  std::vector<double> out;
  for (const auto& item : split_on(spec, ','))
    if (!item.empty()) out.push_back(std::strtod(item.c_str(), nullptr));
  if (out.empty()) throw Error("empty numeric list");
  return out;
}

std::vector<std::pair<double, double>> parse_ratio_list(const std::string& spec) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split_on(spec, ',')) {
    if (item.empty()) continue;
    auto parts = split_on(item, ':');
    if (parts.size() != 2)
      throw Error("ratio '" + item + "' must look like 0.6:0.4");
    out.push_back({std::strtod(parts[0].c_str(), nullptr),
                   std::strtod(parts[1].c_str(), nullptr)});
  }
  if (out.empty()) throw Error("empty ratio list");
  return out;
}

std::vector<uint64_t> parse_cutoff_list(const std::string& spec) {
  std::vector<uint64_t> out;
  for (const auto& item : split_on(spec, ','))
    if (!item.empty()) out.push_back(std::strtoull(item.c_str(), nullptr, 10));
  return out;
}

std::ofstream open_out(const std::string& path) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  return out;
}

// Per-utterance n-best posteriors of one lattice set at a given LM weight.
combine::SystemOutput system_output(const std::vector<lat::Lattice>& lats,
                                    double lmwt, size_t k, int threads) {
  combine::SystemOutput sys;
  std::vector<lat::NBestList> lists(lats.size());
  parallel_for(lats.size(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) lists[i] = lat::nbest(lats[i], lmwt, k);
  });
  for (auto& nb : lists) {
    if (sys.utts.count(nb.utt_id)) throw Error("duplicate utterance id " + nb.utt_id);
    sys.utts.emplace(nb.utt_id, std::move(nb));
  }
  return sys;
}

score::Transcripts best_path_transcripts(const std::vector<lat::Lattice>& lats,
                                         double lmwt, double wip, int threads) {
  score::Transcripts out;
  std::vector<lat::ScoredPath> paths(lats.size());
  parallel_for(lats.size(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) paths[i] = lat::best_path(lats[i], lmwt, wip);
  });
  for (size_t i = 0; i < lats.size(); ++i) {
    if (!out.emplace(lats[i].utt_id, std::move(paths[i].words)).second)
      throw Error("duplicate utterance id " + lats[i].utt_id);
  }
  return out;
}

score::Transcripts normalize_transcripts(const score::Transcripts& t) {
  score::Transcripts out;
  for (const auto& [id, words] : t) {
    auto norm = corpus::normalize_text({join(words, " ")}, corpus::Rules::all());
    std::vector<std::string> flat;
    for (const auto& s : norm.sentences) flat.insert(flat.end(), s.begin(), s.end());
    out.emplace(id, std::move(flat));
  }
  return out;
}

struct MixInputs {
  std::vector<std::string> paths;
  std::vector<ngram::ArpaModel> models;
  std::vector<const ngram::ArpaModel*> pointers() const {
    std::vector<const ngram::ArpaModel*> p;
    for (const auto& m : models) p.push_back(&m);
    return p;
  }
  void load(const std::vector<std::string>& model_paths) {
    paths = model_paths;
    for (const auto& path : model_paths) models.push_back(ngram::read_arpa_file(path));
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-gram language modeling, lattice rescoring and system combination"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for per-utterance work")
      ->capture_default_str();

  // ---- corpus ----
  auto* cmd_norm = app.add_subcommand("normalize", "clean and tokenize raw text");
  std::vector<std::string> norm_in;
  std::string norm_out, norm_rules = "all";
  cmd_norm->add_option("--in", norm_in, "input text files")->required();
  cmd_norm->add_option("--out", norm_out, "output file (default: stdout)");
  cmd_norm->add_option("--rules", norm_rules, "comma list of tones,numbers,dates|all|none")
      ->capture_default_str();

  auto* cmd_stats = app.add_subcommand("vocab-stats", "per-domain vocabulary statistics");
  std::string stats_dir, stats_out, stats_rules = "all";
  bool stats_pretty = false;
  cmd_stats->add_option("--corpus", stats_dir, "corpus root; domain = subdirectory name")
      ->required();
  cmd_stats->add_option("--out", stats_out, "stats TSV (default: stdout)");
  cmd_stats->add_option("--rules", stats_rules, "cleaning rules")->capture_default_str();
  cmd_stats->add_flag("--pretty", stats_pretty, "also print an aligned table");

  // ---- ngram ----
  auto* cmd_count = app.add_subcommand("count", "count n-grams from normalized text");
  std::vector<std::string> count_in;
  std::string count_out;
  int count_order = 3;
  uint64_t count_unk_cutoff = 0;
  cmd_count->add_option("--in", count_in, "normalized text files")->required();
  cmd_count->add_option("--order", count_order, "n-gram order")->capture_default_str();
  cmd_count->add_option("--out", count_out, "counts TSV")->required();
  cmd_count->add_option("--unk-cutoff", count_unk_cutoff,
                        "map words with frequency <= cutoff to <unk>");

  auto* cmd_train = app.add_subcommand("train", "train a modified Kneser-Ney model");
  std::vector<std::string> train_in;
  std::string train_counts, train_arpa, train_cutoffs;
  int train_order = 3;
  uint64_t train_unk_cutoff = 0;
  double train_unk_floor = 0.0;
  bool train_verbose = false;
  cmd_train->add_option("--in", train_in, "normalized text files");
  cmd_train->add_option("--counts", train_counts, "counts TSV instead of text");
  cmd_train->add_option("--order", train_order, "n-gram order")->capture_default_str();
  cmd_train->add_option("--arpa", train_arpa, "output model")->required();
  cmd_train->add_option("--cutoffs", train_cutoffs,
                        "per-order minimum counts starting at 2-grams, e.g. 1,2");
  cmd_train->add_option("--unk-cutoff", train_unk_cutoff,
                        "map words with frequency <= cutoff to <unk>");
  cmd_train->add_option("--unk-floor", train_unk_floor, "minimum <unk> probability");
  cmd_train->add_flag("--verbose", train_verbose, "log discount estimates");

  auto* cmd_ppl = app.add_subcommand("perplexity", "evaluate a model on text");
  std::string ppl_arpa;
  std::vector<std::string> ppl_text;
  cmd_ppl->add_option("--arpa", ppl_arpa, "model")->required();
  cmd_ppl->add_option("--text", ppl_text, "evaluation text files")->required();

  auto* cmd_prune = app.add_subcommand("prune", "relative-entropy pruning");
  std::string prune_in, prune_out;
  double prune_threshold = 1e-8;
  cmd_prune->add_option("--arpa", prune_in, "input model")->required();
  cmd_prune->add_option("--threshold", prune_threshold, "entropy threshold")
      ->capture_default_str();
  cmd_prune->add_option("--out", prune_out, "output model")->required();

  // ---- mix ----
  auto* cmd_mixest = app.add_subcommand("mix-estimate", "EM interpolation weights");
  std::vector<std::string> mixest_models;
  std::string mixest_dev, mixest_out;
  int mixest_iters = 100;
  double mixest_tol = 1e-4, mixest_floor = 1e-4;
  cmd_mixest->add_option("--model", mixest_models, "component models (repeatable)")
      ->required();
  cmd_mixest->add_option("--dev", mixest_dev, "dev text")->required();
  cmd_mixest->add_option("--out", mixest_out, "weights file")->required();
  cmd_mixest->add_option("--max-iters", mixest_iters, "EM iteration cap")
      ->capture_default_str();
  cmd_mixest->add_option("--tol", mixest_tol, "stop when PPL improves less than this")
      ->capture_default_str();
  cmd_mixest->add_option("--floor", mixest_floor, "post-EM weight floor")
      ->capture_default_str();

  auto* cmd_merge = app.add_subcommand("mix-merge", "fold a mixture into one model");
  std::string merge_weights, merge_out;
  std::vector<std::string> merge_models;
  std::vector<double> merge_lambdas;
  cmd_merge->add_option("--weights", merge_weights, "weights file from mix-estimate");
  cmd_merge->add_option("--model", merge_models, "component models (with --weight)");
  cmd_merge->add_option("--weight", merge_lambdas, "weights matching --model order");
  cmd_merge->add_option("--out", merge_out, "merged model")->required();

  auto* cmd_rank = app.add_subcommand("rank", "order components by dev perplexity");
  std::vector<std::string> rank_models;
  std::string rank_dev, rank_out;
  cmd_rank->add_option("--model", rank_models, "component models")->required();
  cmd_rank->add_option("--dev", rank_dev, "dev text")->required();
  cmd_rank->add_option("--out", rank_out, "output TSV (default: stdout)");

  // ---- lattice ----
  auto* cmd_rescore = app.add_subcommand("rescore", "second-pass LM rescoring");
  std::string rescore_in, rescore_arpa, rescore_out;
  cmd_rescore->add_option("--lattices", rescore_in, "lattice file or directory")->required();
  cmd_rescore->add_option("--arpa", rescore_arpa, "un-pruned model")->required();
  cmd_rescore->add_option("--out", rescore_out, "output lattice file")->required();

  auto* cmd_best = app.add_subcommand("best-path", "decode the best hypothesis");
  std::string best_in, best_out;
  double best_lmwt = 8.0, best_wip = 0.0;
  cmd_best->add_option("--lattices", best_in, "lattice file or directory")->required();
  cmd_best->add_option("--lmwt", best_lmwt, "LM weight")->capture_default_str();
  cmd_best->add_option("--wip", best_wip, "word insertion penalty")->capture_default_str();
  cmd_best->add_option("--out", best_out, "hypotheses TSV")->required();

  auto* cmd_nbest = app.add_subcommand("nbest", "n-best hypotheses with posteriors");
  std::string nbest_in, nbest_out;
  double nbest_lmwt = 8.0;
  size_t nbest_k = 100;
  cmd_nbest->add_option("--lattices", nbest_in, "lattice file or directory")->required();
  cmd_nbest->add_option("--lmwt", nbest_lmwt, "LM weight")->capture_default_str();
  cmd_nbest->add_option("--k", nbest_k, "list size")->capture_default_str();
  cmd_nbest->add_option("--out", nbest_out, "output TSV")->required();

  // ---- combination & scoring ----
  auto* cmd_comb = app.add_subcommand("combine", "two-system hypothesis combination");
  std::string comb_sys1, comb_sys2, comb_out;
  double comb_lmwt = 8.0, comb_w1 = 0.5, comb_w2 = 0.5;
  size_t comb_k = 100;
  cmd_comb->add_option("--sys1", comb_sys1, "system 1 lattices")->required();
  cmd_comb->add_option("--sys2", comb_sys2, "system 2 lattices")->required();
  cmd_comb->add_option("--lmwt", comb_lmwt, "LM weight")->capture_default_str();
  cmd_comb->add_option("--w1", comb_w1, "system 1 ratio")->capture_default_str();
  cmd_comb->add_option("--w2", comb_w2, "system 2 ratio")->capture_default_str();
  cmd_comb->add_option("--k", comb_k, "n-best size per system")->capture_default_str();
  cmd_comb->add_option("--out", comb_out, "combined hypotheses TSV")->required();

  auto* cmd_sweep = app.add_subcommand("sweep", "single-system LMWT sweep");
  std::string sweep_in, sweep_refs, sweep_out, sweep_lmwts = "7,8,9,10";
  double sweep_wip = 0.0;
  cmd_sweep->add_option("--lattices", sweep_in, "lattice file or directory")->required();
  cmd_sweep->add_option("--refs", sweep_refs, "reference transcripts")->required();
  cmd_sweep->add_option("--lmwt", sweep_lmwts, "comma list of LM weights")
      ->capture_default_str();
  cmd_sweep->add_option("--wip", sweep_wip, "word insertion penalty");
  cmd_sweep->add_option("--out", sweep_out, "sweep TSV (default: stdout only)");

  auto* cmd_grid = app.add_subcommand("grid-search", "LMWT x ratio combination grid");
  std::string grid_sys1, grid_sys2, grid_refs, grid_out, grid_hyp_out;
  std::string grid_lmwts = "7,8,9,10";
  std::string grid_ratios = "0.3:0.7,0.4:0.6,0.5:0.5,0.6:0.4,0.7:0.3";
  size_t grid_k = 100;
  cmd_grid->add_option("--sys1", grid_sys1, "general-LM system lattices")->required();
  cmd_grid->add_option("--sys2", grid_sys2, "conversation-LM system lattices")->required();
  cmd_grid->add_option("--refs", grid_refs, "reference transcripts")->required();
  cmd_grid->add_option("--lmwt", grid_lmwts, "comma list of LM weights")
      ->capture_default_str();
  cmd_grid->add_option("--ratios", grid_ratios, "comma list of w1:w2 ratios")
      ->capture_default_str();
  cmd_grid->add_option("--k", grid_k, "n-best size per system")->capture_default_str();
  cmd_grid->add_option("--out", grid_out, "grid TSV (default: stdout only)");
  cmd_grid->add_option("--hyp-out", grid_hyp_out, "write the selected cell's hypotheses");

  auto* cmd_wer = app.add_subcommand("wer", "word error rate");
  std::string wer_ref, wer_hyp, wer_per_utt;
  bool wer_norm = false;
  cmd_wer->add_option("--ref", wer_ref, "reference TSV")->required();
  cmd_wer->add_option("--hyp", wer_hyp, "hypothesis TSV")->required();
  cmd_wer->add_flag("--normalize", wer_norm, "normalize both sides before scoring");
  cmd_wer->add_option("--per-utt", wer_per_utt, "per-utterance breakdown TSV");

  auto* cmd_fix = app.add_subcommand("make-fixture", "synthetic decoding experiment");
  fixture::FixtureOptions fix_opts;
  cmd_fix->add_option("--out", fix_opts.out_dir, "output directory")->required();
  cmd_fix->add_option("--seed", fix_opts.seed, "generator seed")->capture_default_str();
  cmd_fix->add_option("--utterances", fix_opts.num_utterances, "test utterances")
      ->capture_default_str();
  cmd_fix->add_option("--train-sentences", fix_opts.train_sentences,
                      "training sentences per domain")
      ->capture_default_str();
  cmd_fix->add_option("--dev-sentences", fix_opts.dev_sentences, "dev sentences per domain")
      ->capture_default_str();
  cmd_fix->add_option("--order", fix_opts.first_pass_order, "first-pass LM order")
      ->capture_default_str();
  cmd_fix->add_option("--noise", fix_opts.noise, "acoustic noise level")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\nRun with --help for usage.\n";
    return 2;
  }

  try {
    if (*cmd_norm) {
      std::vector<std::string> lines;
      for (const auto& path : norm_in) {
        auto file_lines = read_lines(path);
        lines.insert(lines.end(), file_lines.begin(), file_lines.end());
      }
      auto text = corpus::normalize_text(lines, parse_rules(norm_rules));
      if (norm_out.empty()) {
        write_sentences(text, std::cout);
      } else {
        auto out = open_out(norm_out);
        write_sentences(text, out);
      }
    } else if (*cmd_stats) {
      if (!fs::is_directory(stats_dir)) throw Error(stats_dir + " is not a directory");
      std::vector<std::pair<std::string, corpus::NormalizedText>> normalized;
      std::vector<std::string> domains;
      for (const auto& entry : fs::directory_iterator(stats_dir))
        if (entry.is_directory()) domains.push_back(entry.path().filename().string());
      std::sort(domains.begin(), domains.end());
      auto rules = parse_rules(stats_rules);
      for (const auto& domain : domains) {
        std::vector<std::string> files;
        for (const auto& f : fs::directory_iterator(fs::path(stats_dir) / domain))
          if (f.is_regular_file()) files.push_back(f.path().string());
        std::sort(files.begin(), files.end());
        std::vector<std::string> lines;
        for (const auto& f : files) {
          auto file_lines = read_lines(f);
          lines.insert(lines.end(), file_lines.begin(), file_lines.end());
        }
        normalized.emplace_back(domain, corpus::normalize_text(lines, rules));
      }
      std::vector<corpus::DomainText> docs;
      docs.reserve(normalized.size());
      for (const auto& [domain, text] : normalized) docs.push_back({domain, &text});
      auto rows = corpus::vocab_stats(docs);
      std::ostringstream tsv;
      for (const auto& r : rows)
        tsv << r.domain << '\t' << r.vocab_size << '\t' << r.token_count << '\n';
      if (stats_out.empty()) {
        std::cout << tsv.str();
      } else {
        auto out = open_out(stats_out);
        out << tsv.str();
      }
      if (stats_pretty) {
        std::cout << strprintf("%-20s %-12s %s\n", "Domain", "Vocab size", "Tokens");
        for (const auto& r : rows)
          std::cout << strprintf("%-20s %-12s %s\n", r.domain.c_str(),
                                 corpus::format_thousands(r.vocab_size).c_str(),
                                 corpus::format_thousands(r.token_count).c_str());
      }
    } else if (*cmd_count) {
      ngram::CountOptions opts;
      opts.unk_cutoff = count_unk_cutoff;
      auto counts = ngram::count_ngrams(read_tokenized(count_in), count_order, opts);
      auto out = open_out(count_out);
      ngram::write_counts(counts, out);
    } else if (*cmd_train) {
      if (train_in.empty() == train_counts.empty())
        throw Error("train: give exactly one of --in or --counts");
      ngram::TrainOptions opts;
      opts.count_cutoffs = parse_cutoff_list(train_cutoffs);
      opts.unk_floor = train_unk_floor;
      opts.verbose = train_verbose;
      ngram::ArpaModel model = [&] {
        if (!train_in.empty()) {
          ngram::CountOptions copts;
          copts.unk_cutoff = train_unk_cutoff;
          return ngram::train_mkn(
              ngram::count_ngrams(read_tokenized(train_in), train_order, copts), opts);
        }
        std::ifstream in(train_counts, std::ios::binary);
        if (!in) throw Error("cannot open " + train_counts);
        return ngram::train_mkn(ngram::read_counts(in, train_counts), opts);
      }();
      fs::path p(train_arpa);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      ngram::write_arpa_file(model, train_arpa);
      std::cerr << "trained order-" << model.order() << " model with "
                << model.total_entries() << " entries\n";
    } else if (*cmd_ppl) {
      auto model = ngram::read_arpa_file(ppl_arpa);
      auto r = ngram::perplexity(model, read_tokenized(ppl_text));
      std::cout << strprintf("events=%llu oov=%llu log10prob=%.6f ppl=%.6f\n",
                             static_cast<unsigned long long>(r.events),
                             static_cast<unsigned long long>(r.oov_count),
                             r.total_log10, r.ppl);
    } else if (*cmd_prune) {
      auto model = ngram::read_arpa_file(prune_in);
      auto pruned = ngram::prune_entropy(model, prune_threshold);
      fs::path p(prune_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      ngram::write_arpa_file(pruned, prune_out);
      std::cerr << "pruned " << model.total_entries() << " -> "
                << pruned.total_entries() << " entries\n";
    } else if (*cmd_mixest) {
      if (mixest_models.size() < 2)
        throw Error("mix-estimate: need at least two --model arguments");
      MixInputs inputs;
      inputs.load(mixest_models);
      mix::EmOptions opts;
      opts.max_iters = mixest_iters;
      opts.tol = mixest_tol;
      opts.weight_floor = mixest_floor;
      opts.threads = threads;
      auto dev = read_tokenized({mixest_dev});
      auto r = mix::estimate_weights_em(inputs.pointers(), dev, opts);
      mix::MixtureModel mm{inputs.pointers(), r.weights};
      double final_ppl = mix::mixture_perplexity(mm, dev);
      fs::path p(mixest_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      mix::write_weights_file(mixest_out, inputs.paths, r.weights, final_ppl);
      std::cerr << "EM converged after " << r.iterations << " iterations; dev ppl "
                << strprintf("%.4f", final_ppl) << "\n";
    } else if (*cmd_merge) {
      MixInputs inputs;
      mix::MixtureWeights weights;
      if (!merge_weights.empty()) {
        auto wf = mix::read_weights_file(merge_weights);
        inputs.load(wf.component_paths);
        weights = wf.weights;
      } else {
        if (merge_models.empty() || merge_models.size() != merge_lambdas.size())
          throw Error("mix-merge: need --weights or matching --model/--weight lists");
        inputs.load(merge_models);
        weights.lambda = merge_lambdas;
        weights.validate();
      }
      auto merged = mix::merge_static(mix::MixtureModel{inputs.pointers(), weights});
      fs::path p(merge_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      ngram::write_arpa_file(merged, merge_out);
    } else if (*cmd_rank) {
      MixInputs inputs;
      inputs.load(rank_models);
      auto ranked = mix::rank_by_perplexity(inputs.pointers(), read_tokenized({rank_dev}));
      std::ostringstream tsv;
      for (const auto& r : ranked)
        tsv << inputs.paths[r.index] << '\t' << strprintf("%.6f", r.ppl) << '\n';
      if (rank_out.empty()) {
        std::cout << tsv.str();
      } else {
        auto out = open_out(rank_out);
        out << tsv.str();
      }
    } else if (*cmd_rescore) {
      auto lats = load_lattices(rescore_in);
      auto model = ngram::read_arpa_file(rescore_arpa);
      std::vector<lat::Lattice> out_lats(lats.size());
      parallel_for(lats.size(), threads, [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) out_lats[i] = lat::rescore(lats[i], model);
      });
      fs::path p(rescore_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      lat::write_lattice_file(out_lats, rescore_out);
    } else if (*cmd_best) {
      auto lats = load_lattices(best_in);
      auto hyps = best_path_transcripts(lats, best_lmwt, best_wip, threads);
      fs::path p(best_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      score::write_transcripts(hyps, best_out);
    } else if (*cmd_nbest) {
      auto lats = load_lattices(nbest_in);
      auto sys = system_output(lats, nbest_lmwt, nbest_k, threads);
      auto out = open_out(nbest_out);
      for (const auto& [utt, nb] : sys.utts)
        for (size_t i = 0; i < nb.hyps.size(); ++i)
          out << utt << '\t' << i + 1 << '\t'
              << strprintf("%.6f", nb.hyps[i].posterior) << '\t'
              << join(nb.hyps[i].words, " ") << '\n';
    } else if (*cmd_comb) {
      auto sys1 = system_output(load_lattices(comb_sys1), comb_lmwt, comb_k, threads);
      auto sys2 = system_output(load_lattices(comb_sys2), comb_lmwt, comb_k, threads);
      combine::CombinationConfig cfg{comb_lmwt, comb_w1, comb_w2};
      auto hyps = combine::combine_systems(sys1, sys2, cfg);
      fs::path p(comb_out);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      score::write_transcripts(hyps, comb_out);
    } else if (*cmd_sweep) {
      auto lats = load_lattices(sweep_in);
      auto refs = score::read_transcripts(sweep_refs);
      auto result = combine::single_system_sweep(
          [&](double lmwt) {
            return best_path_transcripts(lats, lmwt, sweep_wip, threads);
          },
          refs, parse_double_list(sweep_lmwts));
      if (!sweep_out.empty()) {
        auto out = open_out(sweep_out);
        for (size_t i = 0; i < result.rows.size(); ++i)
          out << strprintf("%g\t%.2f%s\n", result.rows[i].lmwt,
                           result.rows[i].wer_percent,
                           i == result.best ? "\tselected" : "");
      }
      std::cout << combine::render_sweep_table(result);
    } else if (*cmd_grid) {
      auto lats1 = load_lattices(grid_sys1);
      auto lats2 = load_lattices(grid_sys2);
      auto refs = score::read_transcripts(grid_refs);
      std::map<double, combine::SystemOutput> cache1, cache2;
      auto make_provider = [&](std::map<double, combine::SystemOutput>& cache,
                               const std::vector<lat::Lattice>& lats) {
        return [&cache, &lats, grid_k,
                threads](double lmwt) -> const combine::SystemOutput& {
          auto it = cache.find(lmwt);
          if (it == cache.end())
            it = cache.emplace(lmwt, system_output(lats, lmwt, grid_k, threads)).first;
          return it->second;
        };
      };
      auto result = combine::grid_search(make_provider(cache1, lats1),
                                         make_provider(cache2, lats2), refs,
                                         parse_double_list(grid_lmwts),
                                         parse_ratio_list(grid_ratios));
      if (!grid_out.empty()) {
        auto out = open_out(grid_out);
        for (size_t i = 0; i < result.rows.size(); ++i) {
          const auto& r = result.rows[i];
          out << strprintf("%g\t%.2f\t%.2f\t%.2f%s\n", r.lmwt, r.w_general,
                           r.w_conversation, r.wer_percent,
                           i == result.best ? "\tselected" : "");
        }
      }
      std::cout << combine::render_grid_table(result);
      if (!grid_hyp_out.empty()) {
        const auto& best = result.rows[result.best];
        combine::CombinationConfig cfg{best.lmwt, best.w_general, best.w_conversation};
        auto hyps =
            combine::combine_systems(cache1.at(best.lmwt), cache2.at(best.lmwt), cfg);
        fs::path p(grid_hyp_out);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        score::write_transcripts(hyps, grid_hyp_out);
      }
    } else if (*cmd_wer) {
      auto refs = score::read_transcripts(wer_ref);
      auto hyps = score::read_transcripts(wer_hyp);
      if (wer_norm) {
        refs = normalize_transcripts(refs);
        hyps = normalize_transcripts(hyps);
      }
      auto r = score::corpus_wer(refs, hyps, threads);
      std::cout << strprintf(
          "WER %s [ sub=%llu ins=%llu del=%llu / %llu words ]\n",
          score::format_wer_percent(r.total.wer_percent()).c_str(),
          static_cast<unsigned long long>(r.total.substitutions),
          static_cast<unsigned long long>(r.total.insertions),
          static_cast<unsigned long long>(r.total.deletions),
          static_cast<unsigned long long>(r.total.ref_words));
      if (!wer_per_utt.empty()) {
        auto out = open_out(wer_per_utt);
        for (const auto& [id, u] : r.per_utt)
          out << id << '\t' << strprintf("%.2f", u.wer_percent()) << '\t'
              << u.substitutions << '\t' << u.insertions << '\t' << u.deletions
              << '\t' << u.ref_words << '\n';
      }
    } else if (*cmd_fix) {
      auto info = fixture::make_fixture(fix_opts);
      std::cout << "fixture written to " << fix_opts.out_dir << "\n"
                << "  corpora: " << info.general_corpus << ", "
                << info.conversation_corpus << "\n"
                << "  dev: " << info.mixed_dev << "\n"
                << "  refs: " << info.refs << " (" << info.num_utterances
                << " utterances)\n"
                << "  lattices: " << info.lattices << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
