#ifndef LMCOMB_SCORE_HPP
#define LMCOMB_SCORE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lmcomb::score {

struct WerResult {
  uint64_t substitutions = 0;
  uint64_t insertions = 0;
  uint64_t deletions = 0;
  uint64_t ref_words = 0;

  uint64_t errors() const { return substitutions + insertions + deletions; }
  double wer() const;           // fraction; may exceed 1 with many insertions
  double wer_percent() const { return 100.0 * wer(); }

  bool operator==(const WerResult&) const = default;
};

// Minimal-edit alignment with unit costs; among minimal alignments the one
// with the fewest substitutions is reported (insertion/deletion counts are
// then fixed by the length difference).
WerResult align_wer(const std::vector<std::string>& ref,
                    const std::vector<std::string>& hyp);

using Transcripts = std::map<std::string, std::vector<std::string>>;

struct CorpusWer {
  WerResult total;  // counts pooled over utterances before dividing
  std::vector<std::pair<std::string, WerResult>> per_utt;
};

// Throws when the utterance id sets differ, listing the symmetric difference.
CorpusWer corpus_wer(const Transcripts& refs, const Transcripts& hyps,
                     int threads = 1);

// "utt-id<TAB>words" per line.
Transcripts read_transcripts(const std::string& path);
void write_transcripts(const Transcripts& t, const std::string& path);

std::string format_wer_percent(double percent);  // two decimals + '%'

}  // namespace lmcomb::score

#endif  // LMCOMB_SCORE_HPP
