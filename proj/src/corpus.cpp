#include "lmcomb/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "lmcomb/util.hpp"

namespace lmcomb::corpus {

namespace {

// ---------------------------------------------------------------------------
// UTF-8
// ---------------------------------------------------------------------------

bool decode_utf8(const std::string& s, std::vector<uint32_t>* out) {
  out->clear();
  size_t i = 0;
  const auto* b = reinterpret_cast<const unsigned char*>(s.data());
  while (i < s.size()) {
    uint32_t cp = 0;
    int extra = 0;
    unsigned char c = b[i];
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      return false;
    }
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) return false;
      unsigned char cc = b[i + k];
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong encodings, surrogates and out-of-range values.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
        (extra == 3 && cp < 0x10000))
      return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    out->push_back(cp);
    i += extra + 1;
  }
  return true;
}

void encode_utf8(uint32_t cp, std::string* out) {
  if (cp < 0x80) {
    out->push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// ---------------------------------------------------------------------------
// Vietnamese letters: (base, quality, tone) <-> precomposed codepoint
// quality: 0 none, 1 breve, 2 circumflex, 3 horn, 4 stroke (d only)
// tone:    0 none, 1 acute, 2 grave, 3 hook, 4 tilde, 5 dot-below
// ---------------------------------------------------------------------------

enum Quality : uint8_t { kQNone = 0, kQBreve, kQCircumflex, kQHorn, kQStroke };
enum Tone : uint8_t { kTNone = 0, kTAcute, kTGrave, kTHook, kTTilde, kTDot };

struct VLetter {
  char base;        // ascii a..z
  uint8_t quality;  // Quality
  uint8_t tone;     // Tone
};

struct LetterRow {
  uint32_t cp;
  char base;
  uint8_t quality, tone, upper;
};

// Generated from the Unicode NFC forms of base + quality + tone sequences.
constexpr LetterRow kLetterTable[] = {
    {0x00C0, 'a', 0, 2, 1}, {0x00C1, 'a', 0, 1, 1}, {0x00C2, 'a', 2, 0, 1},
    {0x00C3, 'a', 0, 4, 1}, {0x00C8, 'e', 0, 2, 1}, {0x00C9, 'e', 0, 1, 1},
    {0x00CA, 'e', 2, 0, 1}, {0x00CC, 'i', 0, 2, 1}, {0x00CD, 'i', 0, 1, 1},
    {0x00D2, 'o', 0, 2, 1}, {0x00D3, 'o', 0, 1, 1}, {0x00D4, 'o', 2, 0, 1},
    {0x00D5, 'o', 0, 4, 1}, {0x00D9, 'u', 0, 2, 1}, {0x00DA, 'u', 0, 1, 1},
    {0x00DD, 'y', 0, 1, 1}, {0x00E0, 'a', 0, 2, 0}, {0x00E1, 'a', 0, 1, 0},
    {0x00E2, 'a', 2, 0, 0}, {0x00E3, 'a', 0, 4, 0}, {0x00E8, 'e', 0, 2, 0},
    {0x00E9, 'e', 0, 1, 0}, {0x00EA, 'e', 2, 0, 0}, {0x00EC, 'i', 0, 2, 0},
    {0x00ED, 'i', 0, 1, 0}, {0x00F2, 'o', 0, 2, 0}, {0x00F3, 'o', 0, 1, 0},
    {0x00F4, 'o', 2, 0, 0}, {0x00F5, 'o', 0, 4, 0}, {0x00F9, 'u', 0, 2, 0},
    {0x00FA, 'u', 0, 1, 0}, {0x00FD, 'y', 0, 1, 0}, {0x0102, 'a', 1, 0, 1},
    {0x0103, 'a', 1, 0, 0}, {0x0110, 'd', 4, 0, 1}, {0x0111, 'd', 4, 0, 0},
    {0x0128, 'i', 0, 4, 1}, {0x0129, 'i', 0, 4, 0}, {0x0168, 'u', 0, 4, 1},
    {0x0169, 'u', 0, 4, 0}, {0x01A0, 'o', 3, 0, 1}, {0x01A1, 'o', 3, 0, 0},
    {0x01AF, 'u', 3, 0, 1}, {0x01B0, 'u', 3, 0, 0}, {0x1EA0, 'a', 0, 5, 1},
    {0x1EA1, 'a', 0, 5, 0}, {0x1EA2, 'a', 0, 3, 1}, {0x1EA3, 'a', 0, 3, 0},
    {0x1EA4, 'a', 2, 1, 1}, {0x1EA5, 'a', 2, 1, 0}, {0x1EA6, 'a', 2, 2, 1},
    {0x1EA7, 'a', 2, 2, 0}, {0x1EA8, 'a', 2, 3, 1}, {0x1EA9, 'a', 2, 3, 0},
    {0x1EAA, 'a', 2, 4, 1}, {0x1EAB, 'a', 2, 4, 0}, {0x1EAC, 'a', 2, 5, 1},
    {0x1EAD, 'a', 2, 5, 0}, {0x1EAE, 'a', 1, 1, 1}, {0x1EAF, 'a', 1, 1, 0},
    {0x1EB0, 'a', 1, 2, 1}, {0x1EB1, 'a', 1, 2, 0}, {0x1EB2, 'a', 1, 3, 1},
    {0x1EB3, 'a', 1, 3, 0}, {0x1EB4, 'a', 1, 4, 1}, {0x1EB5, 'a', 1, 4, 0},
    {0x1EB6, 'a', 1, 5, 1}, {0x1EB7, 'a', 1, 5, 0}, {0x1EB8, 'e', 0, 5, 1},
    {0x1EB9, 'e', 0, 5, 0}, {0x1EBA, 'e', 0, 3, 1}, {0x1EBB, 'e', 0, 3, 0},
    {0x1EBC, 'e', 0, 4, 1}, {0x1EBD, 'e', 0, 4, 0}, {0x1EBE, 'e', 2, 1, 1},
    {0x1EBF, 'e', 2, 1, 0}, {0x1EC0, 'e', 2, 2, 1}, {0x1EC1, 'e', 2, 2, 0},
    {0x1EC2, 'e', 2, 3, 1}, {0x1EC3, 'e', 2, 3, 0}, {0x1EC4, 'e', 2, 4, 1},
    {0x1EC5, 'e', 2, 4, 0}, {0x1EC6, 'e', 2, 5, 1}, {0x1EC7, 'e', 2, 5, 0},
    {0x1EC8, 'i', 0, 3, 1}, {0x1EC9, 'i', 0, 3, 0}, {0x1ECA, 'i', 0, 5, 1},
    {0x1ECB, 'i', 0, 5, 0}, {0x1ECC, 'o', 0, 5, 1}, {0x1ECD, 'o', 0, 5, 0},
    {0x1ECE, 'o', 0, 3, 1}, {0x1ECF, 'o', 0, 3, 0}, {0x1ED0, 'o', 2, 1, 1},
    {0x1ED1, 'o', 2, 1, 0}, {0x1ED2, 'o', 2, 2, 1}, {0x1ED3, 'o', 2, 2, 0},
    {0x1ED4, 'o', 2, 3, 1}, {0x1ED5, 'o', 2, 3, 0}, {0x1ED6, 'o', 2, 4, 1},
    {0x1ED7, 'o', 2, 4, 0}, {0x1ED8, 'o', 2, 5, 1}, {0x1ED9, 'o', 2, 5, 0},
    {0x1EDA, 'o', 3, 1, 1}, {0x1EDB, 'o', 3, 1, 0}, {0x1EDC, 'o', 3, 2, 1},
    {0x1EDD, 'o', 3, 2, 0}, {0x1EDE, 'o', 3, 3, 1}, {0x1EDF, 'o', 3, 3, 0},
    {0x1EE0, 'o', 3, 4, 1}, {0x1EE1, 'o', 3, 4, 0}, {0x1EE2, 'o', 3, 5, 1},
    {0x1EE3, 'o', 3, 5, 0}, {0x1EE4, 'u', 0, 5, 1}, {0x1EE5, 'u', 0, 5, 0},
    {0x1EE6, 'u', 0, 3, 1}, {0x1EE7, 'u', 0, 3, 0}, {0x1EE8, 'u', 3, 1, 1},
    {0x1EE9, 'u', 3, 1, 0}, {0x1EEA, 'u', 3, 2, 1}, {0x1EEB, 'u', 3, 2, 0},
    {0x1EEC, 'u', 3, 3, 1}, {0x1EED, 'u', 3, 3, 0}, {0x1EEE, 'u', 3, 4, 1},
    {0x1EEF, 'u', 3, 4, 0}, {0x1EF0, 'u', 3, 5, 1}, {0x1EF1, 'u', 3, 5, 0},
    {0x1EF2, 'y', 0, 2, 1}, {0x1EF3, 'y', 0, 2, 0}, {0x1EF4, 'y', 0, 5, 1},
    {0x1EF5, 'y', 0, 5, 0}, {0x1EF6, 'y', 0, 3, 1}, {0x1EF7, 'y', 0, 3, 0},
    {0x1EF8, 'y', 0, 4, 1}, {0x1EF9, 'y', 0, 4, 0},
};

struct LetterMaps {
  std::unordered_map<uint32_t, VLetter> from_cp;
  // key = base | quality<<8 | tone<<16, value = lowercase codepoint
  std::unordered_map<uint32_t, uint32_t> to_cp;

  LetterMaps() {
    for (const auto& row : kLetterTable) {
      from_cp.emplace(row.cp, VLetter{row.base, row.quality, row.tone});
      if (!row.upper) {
        to_cp.emplace(key(row.base, row.quality, row.tone), row.cp);
      }
    }
  }
  static uint32_t key(char b, uint8_t q, uint8_t t) {
    return static_cast<uint32_t>(static_cast<unsigned char>(b)) |
           (static_cast<uint32_t>(q) << 8) | (static_cast<uint32_t>(t) << 16);
  }
};

const LetterMaps& letter_maps() {
  static const LetterMaps maps;
  return maps;
}

bool quality_valid(char base, uint8_t q) {
  switch (base) {
    case 'a': return q == kQNone || q == kQBreve || q == kQCircumflex;
    case 'e': return q == kQNone || q == kQCircumflex;
    case 'o': return q == kQNone || q == kQCircumflex || q == kQHorn;
    case 'u': return q == kQNone || q == kQHorn;
    case 'i':
    case 'y': return q == kQNone;
    case 'd': return q == kQNone || q == kQStroke;
    default: return q == kQNone;
  }
}

bool is_vowel_base(char b) {
  return b == 'a' || b == 'e' || b == 'i' || b == 'o' || b == 'u' || b == 'y';
}

uint32_t compose(const VLetter& l) {
  if (l.quality == kQNone && l.tone == kTNone)
    return static_cast<uint32_t>(static_cast<unsigned char>(l.base));
  auto it = letter_maps().to_cp.find(LetterMaps::key(l.base, l.quality, l.tone));
  if (it == letter_maps().to_cp.end())
    return static_cast<uint32_t>(static_cast<unsigned char>(l.base));
  return it->second;
}

std::optional<uint8_t> tone_of_mark(uint32_t cp) {
  switch (cp) {
    case 0x0301: return kTAcute;
    case 0x0300: return kTGrave;
    case 0x0309: return kTHook;
    case 0x0303: return kTTilde;
    case 0x0323: return kTDot;
    default: return std::nullopt;
  }
}

std::optional<uint8_t> quality_of_mark(uint32_t cp) {
  switch (cp) {
    case 0x0306: return kQBreve;
    case 0x0302: return kQCircumflex;
    case 0x031B: return kQHorn;
    default: return std::nullopt;
  }
}

// Maps a codepoint to a letter triple when it belongs to the Vietnamese
// alphabet (plain ascii letters included).
std::optional<VLetter> letter_of(uint32_t cp) {
  if (cp >= 'a' && cp <= 'z')
    return VLetter{static_cast<char>(cp), kQNone, kTNone};
  auto it = letter_maps().from_cp.find(cp);
  if (it != letter_maps().from_cp.end()) return it->second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Number verbalization
// ---------------------------------------------------------------------------

const char* kDigitWords[] = {"không", "một", "hai",  "ba",  "bốn",
                             "năm",   "sáu", "bảy", "tám", "chín"};

void read_group(uint64_t g, bool leading, std::vector<std::string>* out) {
  uint64_t h = g / 100, t = (g / 10) % 10, u = g % 10;
  if (h > 0) {
    out->push_back(kDigitWords[h]);
    out->push_back("trăm");
  } else if (!leading && (t > 0 || u > 0)) {
    out->push_back("không");
    out->push_back("trăm");
  }
  if (t >= 2) {
    out->push_back(kDigitWords[t]);
    out->push_back("mươi");
    if (u == 1) out->push_back("mốt");
    else if (u == 4) out->push_back("tư");
    else if (u == 5) out->push_back("lăm");
    else if (u > 0) out->push_back(kDigitWords[u]);
  } else if (t == 1) {
    out->push_back("mười");
    if (u == 5) out->push_back("lăm");
    else if (u > 0) out->push_back(kDigitWords[u]);
  } else if (u > 0) {
    if (h > 0 || !leading) out->push_back("linh");
    out->push_back(kDigitWords[u]);
  }
}

}  // namespace

std::vector<std::string> verbalize_integer(uint64_t value) {
  if (value >= 1000000000000ull)
    throw Error("verbalize_integer: value must be below 10^12");
  if (value == 0) return {"không"};
  const char* scales[] = {"", "nghìn", "triệu", "tỷ"};
  std::array<uint64_t, 4> groups{};  // [0] = least significant
  int n = 0;
  while (value > 0) {
    groups[n++] = value % 1000;
    value /= 1000;
  }
  std::vector<std::string> out;
  for (int i = n - 1; i >= 0; --i) {
    if (groups[i] == 0) continue;
    read_group(groups[i], i == n - 1, &out);
    if (i > 0) out.push_back(scales[i]);
  }
  return out;
}

std::vector<std::string> verbalize_digit_string(const std::string& digits) {
  std::vector<std::string> out;
  for (char c : digits) {
    if (c < '0' || c > '9') throw Error("verbalize_digit_string: non-digit input");
    out.push_back(kDigitWords[c - '0']);
  }
  return out;
}

bool valid_utf8(const std::string& text) {
  std::vector<uint32_t> cps;
  return decode_utf8(text, &cps);
}

std::string nfc_lower(const std::string& text) {
  std::vector<uint32_t> cps;
  if (!decode_utf8(text, &cps)) throw Error("nfc_lower: invalid UTF-8");
  std::string out;
  out.reserve(text.size());
  std::optional<VLetter> pending;
  auto flush = [&] {
    if (pending) {
      encode_utf8(compose(*pending), &out);
      pending.reset();
    }
  };
  for (uint32_t cp : cps) {
    if (cp >= 'A' && cp <= 'Z') cp += 32;
    if (auto tone = tone_of_mark(cp)) {
      if (pending && is_vowel_base(pending->base)) {
        pending->tone = *tone;  // repeated tone marks: last one wins
        continue;
      }
      flush();
      encode_utf8(cp, &out);
      continue;
    }
    if (auto q = quality_of_mark(cp)) {
      if (pending && quality_valid(pending->base, *q)) {
        pending->quality = *q;
        continue;
      }
      flush();
      encode_utf8(cp, &out);
      continue;
    }
    flush();
    if (auto letter = letter_of(cp)) {
      pending = *letter;
      continue;
    }
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) cp += 32;  // other Latin-1 uppercase
    encode_utf8(cp, &out);
  }
  flush();
  return out;
}

std::string fix_tone_placement(const std::string& token) {
  std::vector<uint32_t> cps;
  if (!decode_utf8(token, &cps)) return token;
  std::vector<VLetter> letters;
  letters.reserve(cps.size());
  for (uint32_t cp : cps) {
    auto l = letter_of(cp);
    if (!l) return token;  // digits, punctuation, foreign scripts: untouched
    if (l->base == 'f' || l->base == 'j' || l->base == 'w' || l->base == 'z')
      return token;
    letters.push_back(*l);
  }
  // Exactly one contiguous vowel run, otherwise the token is not a single
  // syllable and repositioning is unsafe.
  int run_start = -1, run_end = -1;
  for (size_t i = 0; i < letters.size(); ++i) {
    if (is_vowel_base(letters[i].base)) {
      if (run_end >= 0 && static_cast<int>(i) > run_end) return token;
      if (run_start < 0) run_start = static_cast<int>(i);
      run_end = static_cast<int>(i) + 1;
    }
  }
  if (run_start < 0) return token;
  uint8_t tone = kTNone;
  for (int i = run_start; i < run_end; ++i) {
    if (letters[i].tone != kTNone) tone = letters[i].tone;  // last one wins
    letters[i].tone = kTNone;
  }
  if (tone == kTNone) return token;

  // 'qu' and 'gi' onsets: the u/i belongs to the consonant, not the glide.
  int group_start = run_start;
  if (run_start > 0 && run_end - run_start >= 2) {
    char prev = letters[run_start - 1].base;
    char first = letters[run_start].base;
    if (prev == 'q' && first == 'u' && letters[run_start].quality == kQNone)
      ++group_start;
    else if (prev == 'g' && first == 'i' && letters[run_start].quality == kQNone)
      ++group_start;
  }

  int pos = -1;
  for (int i = run_end - 1; i >= group_start; --i) {
    if (letters[i].quality == kQBreve || letters[i].quality == kQCircumflex ||
        letters[i].quality == kQHorn) {
      pos = i;  // last vowel with a quality diacritic carries the tone
      break;
    }
  }
  if (pos < 0) {
    bool has_coda = run_end < static_cast<int>(letters.size());
    int group_len = run_end - group_start;
    if (has_coda || group_len == 1)
      pos = run_end - 1;
    else
      pos = run_end - 2;  // open syllable: penultimate vowel (hòa, thúy)
  }
  letters[pos].tone = tone;

  std::string out;
  for (const auto& l : letters) encode_utf8(compose(l), &out);
  return out;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

uint64_t to_u64(std::string_view s) {
  uint64_t v = 0;
  for (char c : s) v = v * 10 + static_cast<uint64_t>(c - '0');
  return v;
}

void verbalize_number_token(std::string_view digits, std::vector<std::string>* out) {
  // Leading zeros and out-of-range values are read digit by digit.
  if (digits.size() > 1 && digits.front() == '0') {
    auto words = verbalize_digit_string(std::string(digits));
    out->insert(out->end(), words.begin(), words.end());
    return;
  }
  if (digits.size() > 12) {
    auto words = verbalize_digit_string(std::string(digits));
    out->insert(out->end(), words.begin(), words.end());
    return;
  }
  auto words = verbalize_integer(to_u64(digits));
  out->insert(out->end(), words.begin(), words.end());
}

bool try_date(std::string_view core, std::vector<std::string>* out) {
  char sep = 0;
  for (char c : core)
    if (c == '/' || c == '-') {
      sep = c;
      break;
    }
  if (!sep) return false;
  auto parts = split_on(core, sep);
  if (parts.size() != 3) return false;
  for (const auto& p : parts)
    if (!all_digits(p)) return false;
  if (parts[0].size() > 2 || parts[1].size() > 2 || parts[2].size() > 4) return false;
  uint64_t d = to_u64(parts[0]), m = to_u64(parts[1]), y = to_u64(parts[2]);
  if (d < 1 || d > 31 || m < 1 || m > 12 || y < 1) return false;

  if (d <= 10) out->push_back("mùng");
  auto dw = verbalize_integer(d);
  out->insert(out->end(), dw.begin(), dw.end());
  out->push_back("tháng");
  if (m == 4) {
    out->push_back("tư");
  } else {
    auto mw = verbalize_integer(m);
    out->insert(out->end(), mw.begin(), mw.end());
  }
  out->push_back("năm");
  auto yw = verbalize_integer(y);
  out->insert(out->end(), yw.begin(), yw.end());
  return true;
}

bool try_number(std::string_view core, std::vector<std::string>* out) {
  if (all_digits(core)) {
    verbalize_number_token(core, out);
    return true;
  }
  // 1.234.567 thousands grouping
  {
    auto parts = split_on(core, '.');
    if (parts.size() >= 2 && all_digits(parts[0]) && parts[0].size() <= 3) {
      bool ok = true;
      for (size_t i = 1; i < parts.size(); ++i)
        if (!all_digits(parts[i]) || parts[i].size() != 3) ok = false;
      if (ok) {
        std::string joined;
        for (const auto& p : parts) joined += p;
        verbalize_number_token(joined, out);
        return true;
      }
    }
  }
  // decimal: 3,14 or 3.14 -> integer part, "phẩy", digitwise fraction
  for (char sep : {',', '.'}) {
    auto parts = split_on(core, sep);
    if (parts.size() == 2 && all_digits(parts[0]) && all_digits(parts[1])) {
      verbalize_number_token(parts[0], out);
      out->push_back("phẩy");
      auto frac = verbalize_digit_string(std::string(parts[1]));
      out->insert(out->end(), frac.begin(), frac.end());
      return true;
    }
  }
  return false;
}

bool is_ascii_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

// Splits a core on ascii punctuation, verbalizing digit runs when the
// numbers rule is active and repositioning tones on word pieces.
void expand_plain(std::string_view core, const Rules& rules,
                  std::vector<std::string>* out) {
  size_t i = 0;
  while (i < core.size()) {
    unsigned char c = core[i];
    if (c < 0x80 && !is_ascii_alnum(static_cast<char>(c))) {
      ++i;
      continue;
    }
    if (c >= '0' && c <= '9') {
      size_t start = i;
      while (i < core.size() && core[i] >= '0' && core[i] <= '9') ++i;
      std::string_view digits = core.substr(start, i - start);
      if (rules.numbers) {
        verbalize_number_token(digits, out);
      } else {
        out->emplace_back(digits);
      }
      continue;
    }
    size_t start = i;
    while (i < core.size()) {
      unsigned char cc = core[i];
      if (cc < 0x80 && (!is_ascii_alnum(static_cast<char>(cc)) || (cc >= '0' && cc <= '9')))
        break;
      ++i;
    }
    std::string piece(core.substr(start, i - start));
    if (rules.tones) piece = fix_tone_placement(piece);
    out->push_back(std::move(piece));
  }
}

void expand_core(std::string_view core, const Rules& rules,
                 std::vector<std::string>* out) {
  if (rules.dates && try_date(core, out)) return;
  if (rules.numbers && try_number(core, out)) return;
  expand_plain(core, rules, out);
}

bool is_ascii_punct(char c) {
  return static_cast<unsigned char>(c) < 0x80 && !is_ascii_alnum(c) &&
         !std::isspace(static_cast<unsigned char>(c));
}

}  // namespace

NormalizedText normalize_text(const std::vector<std::string>& lines, Rules rules) {
  NormalizedText result;
  if (rules.tones) result.applied_rules.push_back("tones");
  if (rules.numbers) result.applied_rules.push_back("numbers");
  if (rules.dates) result.applied_rules.push_back("dates");

  std::vector<std::string> sentence;
  auto close_sentence = [&] {
    if (!sentence.empty()) {
      result.sentences.push_back(std::move(sentence));
      sentence.clear();
    }
  };

  for (size_t li = 0; li < lines.size(); ++li) {
    if (!valid_utf8(lines[li]))
      throw Error(strprintf("line %zu: invalid UTF-8", li + 1));
    std::string lowered = nfc_lower(lines[li]);
    for (const auto& tok : split_whitespace(lowered)) {
      size_t begin = 0, end = tok.size();
      while (begin < end && is_ascii_punct(tok[begin])) ++begin;
      bool sentence_end = false;
      while (end > begin && is_ascii_punct(tok[end - 1])) {
        char c = tok[end - 1];
        if (c == '.' || c == '!' || c == '?') sentence_end = true;
        --end;
      }
      if (end > begin)
        expand_core(std::string_view(tok).substr(begin, end - begin), rules, &sentence);
      if (sentence_end) close_sentence();
    }
    close_sentence();  // newline terminates a sentence
  }
  return result;
}

std::vector<VocabStats> vocab_stats(const std::vector<DomainText>& corpus) {
  std::vector<VocabStats> rows;
  std::unordered_map<std::string, size_t> index;
  std::vector<std::unordered_set<std::string>> vocab_sets;
  for (const auto& doc : corpus) {
    if (doc.domain.empty()) throw Error("vocab_stats: empty domain label");
    auto [it, inserted] = index.emplace(doc.domain, rows.size());
    if (inserted) {
      rows.push_back(VocabStats{doc.domain, 0, 0});
      vocab_sets.emplace_back();
    }
    size_t row = it->second;
    for (const auto& sent : doc.text->sentences) {
      for (const auto& tok : sent) {
        vocab_sets[row].insert(tok);
        ++rows[row].token_count;
      }
    }
  }
  for (size_t i = 0; i < rows.size(); ++i)
    rows[i].vocab_size = vocab_sets[i].size();
  return rows;
}

std::string format_thousands(uint64_t n) {
  if (n < 1000) return std::to_string(n);
  std::string digits = std::to_string(n / 1000);
  std::string grouped;
  int from_right = 0;
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    grouped.push_back(digits[i]);
    if (++from_right % 3 == 0 && i > 0) grouped.push_back('.');
  }
  std::reverse(grouped.begin(), grouped.end());
  return grouped + "k";
}

}  // namespace lmcomb::corpus
