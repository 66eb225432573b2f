#include "lmcomb/score.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "lmcomb/util.hpp"

namespace lmcomb::score {

double WerResult::wer() const {
  if (ref_words == 0)
    return errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(errors()) / static_cast<double>(ref_words);
}

WerResult align_wer(const std::vector<std::string>& ref,
                    const std::vector<std::string>& hyp) {
  const size_t nr = ref.size(), nh = hyp.size();
  // Scalarized bi-criterion: minimize total edits first, substitutions
  // second.  Insertions and deletions are then determined by the length
  // difference, so the counts are unique.
  const uint64_t big = nr + nh + 1;
  std::vector<std::vector<uint64_t>> cost(nr + 1, std::vector<uint64_t>(nh + 1, 0));
  for (size_t i = 1; i <= nr; ++i) cost[i][0] = i * big;          // deletions
  for (size_t j = 1; j <= nh; ++j) cost[0][j] = j * big;          // insertions
  for (size_t i = 1; i <= nr; ++i) {
    for (size_t j = 1; j <= nh; ++j) {
      uint64_t diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : big + 1);
      uint64_t del = cost[i - 1][j] + big;
      uint64_t ins = cost[i][j - 1] + big;
      cost[i][j] = std::min({del, diag, ins});
    }
  }
  uint64_t edits = cost[nr][nh] / big;
  uint64_t subs = cost[nr][nh] % big;
  // edits = S + I + D, I - D = nh - nr.
  uint64_t non_sub = edits - subs;
  WerResult r;
  r.substitutions = subs;
  r.ref_words = nr;
  if (nh >= nr) {
    r.insertions = (non_sub + (nh - nr)) / 2;
    r.deletions = non_sub - r.insertions;
  } else {
    r.deletions = (non_sub + (nr - nh)) / 2;
    r.insertions = non_sub - r.deletions;
  }
  return r;
}

CorpusWer corpus_wer(const Transcripts& refs, const Transcripts& hyps, int threads) {
  std::vector<std::string> only_ref, only_hyp;
  for (const auto& [id, words] : refs)
    if (!hyps.count(id)) only_ref.push_back(id);
  for (const auto& [id, words] : hyps)
    if (!refs.count(id)) only_hyp.push_back(id);
  if (!only_ref.empty() || !only_hyp.empty())
    throw Error("corpus_wer: utterance id mismatch; missing from hyp: [" +
                join(only_ref, " ") + "] missing from ref: [" + join(only_hyp, " ") + "]");

  CorpusWer out;
  std::vector<const std::pair<const std::string, std::vector<std::string>>*> ref_rows;
  for (const auto& row : refs) ref_rows.push_back(&row);
  out.per_utt.resize(ref_rows.size());
  parallel_for(ref_rows.size(), threads, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const auto& [id, ref_words] = *ref_rows[i];
      out.per_utt[i] = {id, align_wer(ref_words, hyps.at(id))};
    }
  });
  for (const auto& [id, r] : out.per_utt) {
    out.total.substitutions += r.substitutions;
    out.total.insertions += r.insertions;
    out.total.deletions += r.deletions;
    out.total.ref_words += r.ref_words;
  }
  return out;
}

Transcripts read_transcripts(const std::string& path) {
  Transcripts t;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(strprintf("%s:%zu: expected 'utt-id<TAB>text'", path.c_str(), lineno));
    std::string id = line.substr(0, tab);
    if (t.count(id))
      throw Error(strprintf("%s:%zu: duplicate utterance id '%s'", path.c_str(),
                            lineno, id.c_str()));
    t.emplace(std::move(id), split_whitespace(line.substr(tab + 1)));
  }
  return t;
}

void write_transcripts(const Transcripts& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [id, words] : t) out << id << '\t' << join(words, " ") << '\n';
}

std::string format_wer_percent(double percent) {
  return strprintf("%.2f%%", percent);
}

}  // namespace lmcomb::score
