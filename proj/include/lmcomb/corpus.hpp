#ifndef LMCOMB_CORPUS_HPP
#define LMCOMB_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lmcomb::corpus {

// Cleaning rules, selectable per run.
struct Rules {
  bool tones = false;    // reposition Vietnamese tone marks to canonical vowels
  bool numbers = false;  // verbalize digit strings to Vietnamese words
  bool dates = false;    // verbalize dd/mm/yyyy and dd-mm-yyyy

  static Rules all() { return {true, true, true}; }
  static Rules none() { return {}; }
};

struct RawDocument {
  std::string domain;
  std::vector<std::string> lines;
};

struct NormalizedText {
  // One token sequence per sentence.
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> applied_rules;
};

struct VocabStats {
  std::string domain;
  uint64_t vocab_size = 0;
  uint64_t token_count = 0;
};

// Lowercases, composes Vietnamese letters to their precomposed (NFC) form,
// applies the selected cleaning rules, splits sentences on . ! ? and
// newlines, and strips punctuation from tokens.
// Throws Error naming the 1-based line number on malformed UTF-8.
NormalizedText normalize_text(const std::vector<std::string>& lines, Rules rules);

struct DomainText {
  std::string domain;
  const NormalizedText* text;
};

// One row per distinct domain, in first-seen order; rows for repeated domain
// labels are merged.  Empty domains produce zero rows (vocab 0, tokens 0).
std::vector<VocabStats> vocab_stats(const std::vector<DomainText>& corpus);

// Floor-of-thousands rendering: 446312 -> "446k", 1247219 -> "1.247k"
// (thousands grouped with '.'), values under 1000 rendered verbatim.
std::string format_thousands(uint64_t n);

// Pieces exposed for tests and for the CLI.
std::string nfc_lower(const std::string& text);          // compose + lowercase
std::string fix_tone_placement(const std::string& token);
std::vector<std::string> verbalize_integer(uint64_t value);        // < 10^12
std::vector<std::string> verbalize_digit_string(const std::string& digits);
bool valid_utf8(const std::string& text);

}  // namespace lmcomb::corpus

#endif  // LMCOMB_CORPUS_HPP
