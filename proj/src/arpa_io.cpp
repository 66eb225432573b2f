#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lmcomb/ngram.hpp"

namespace lmcomb::ngram {

namespace {

// log10 values are written with 12 decimals so that a write/read round trip
// leaves perplexities unchanged to well below 1e-9 relative.
std::string format_logprob(double v) {
  if (v <= kLog10Zero) return "-99";
  return strprintf("%.12f", v);
}

}  // namespace

void write_arpa(const ArpaModel& model, std::ostream& out) {
  out << "\\data\\\n";
  for (int k = 1; k <= model.order(); ++k)
    out << "ngram " << k << "=" << model.entry_count(k) << "\n";
  for (int k = 1; k <= model.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    std::map<std::string, const Prob*> sorted;
    for (const auto& [gram, prob] : model.entries(k)) {
      std::vector<std::string> words;
      for (WordId w : gram) words.push_back(model.vocab().word(w));
      sorted.emplace(join(words, " "), &prob);
    }
    const bool top = (k == model.order());
    for (const auto& [gram, prob] : sorted) {
      out << format_logprob(prob->logprob) << '\t' << gram;
      if (!top) out << '\t' << format_logprob(prob->backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void write_arpa_file(const ArpaModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_arpa(model, out);
  if (!out) throw Error("write failed for " + path);
}

namespace {

double parse_logprob(const std::string& field, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0')
    throw Error(where + ": bad float '" + field + "'");
  if (v <= -98.0) return kLog10Zero;
  return v;
}

}  // namespace

ArpaModel read_arpa(std::istream& in, const std::string& source_name) {
  std::string line;
  size_t lineno = 0;
  auto where = [&] { return strprintf("%s:%zu", source_name.c_str(), lineno); };
  auto next_line = [&](std::string* out) {
    if (!std::getline(in, *out)) return false;
    ++lineno;
    if (!out->empty() && out->back() == '\r') out->pop_back();
    return true;
  };

  // Header
  bool found_data = false;
  while (next_line(&line)) {
    if (line == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw Error(source_name + ": missing \\data\\ header");

  std::vector<size_t> declared;  // declared[k-1] = entry count for order k
  while (next_line(&line)) {
    if (line.empty()) break;
    if (line.rfind("ngram ", 0) != 0)
      throw Error(where() + ": expected 'ngram N=count' line");
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw Error(where() + ": malformed ngram line");
    int n = std::atoi(line.substr(6, eq - 6).c_str());
    long long cnt = std::atoll(line.substr(eq + 1).c_str());
    if (n != static_cast<int>(declared.size()) + 1)
      throw Error(where() + ": ngram orders must be consecutive from 1");
    if (cnt < 0) throw Error(where() + ": negative ngram count");
    declared.push_back(static_cast<size_t>(cnt));
  }
  if (declared.empty()) throw Error(source_name + ": no ngram counts declared");

  const int order = static_cast<int>(declared.size());
  ArpaModel model(order, Vocabulary());
  int current = 0;  // order of the section being read (0 = none yet)
  size_t read_in_section = 0;

  auto check_section_complete = [&] {
    if (current > 0 && read_in_section != declared[current - 1])
      throw Error(strprintf("%s: %zu-grams section has %zu entries, header says %zu",
                            source_name.c_str(), static_cast<size_t>(current),
                            read_in_section, declared[current - 1]));
  };

  bool saw_end = false;
  while (next_line(&line)) {
    if (line.empty()) continue;
    if (line == "\\end\\") {
      saw_end = true;
      break;
    }
    if (line.front() == '\\') {
      int n = 0;
      if (std::sscanf(line.c_str(), "\\%d-grams:", &n) == 1) {
        if (n != current + 1)
          throw Error(where() + ": n-gram sections out of order");
        check_section_complete();
        current = n;
        read_in_section = 0;
        continue;
      }
      throw Error(where() + ": unknown section '" + line + "'");
    }
    if (current == 0) throw Error(where() + ": entry before any n-gram section");

    auto fields = split_on(line, '\t');
    // Tolerate space-separated files from other toolchains.
    if (fields.size() == 1) {
      fields = split_whitespace(line);
      if (fields.size() >= static_cast<size_t>(current) + 1) {
        std::vector<std::string> regrouped;
        regrouped.push_back(fields[0]);
        std::vector<std::string> words(fields.begin() + 1,
                                       fields.begin() + 1 + current);
        regrouped.push_back(join(words, " "));
        for (size_t i = 1 + current; i < fields.size(); ++i)
          regrouped.push_back(fields[i]);
        fields = std::move(regrouped);
      }
    }
    if (fields.size() < 2) throw Error(where() + ": malformed entry");
    auto words = split_whitespace(fields[1]);
    if (words.size() != static_cast<size_t>(current))
      throw Error(where() + strprintf(": expected %d words in %d-gram", current, current));
    if (fields.size() > 3 || (current == order && fields.size() == 3))
      throw Error(where() + ": unexpected backoff column");

    Prob prob;
    prob.logprob = parse_logprob(fields[0], where());
    if (prob.logprob > 0.0)
      throw Error(where() + ": positive log probability");
    if (fields.size() == 3) prob.backoff = parse_logprob(fields[2], where());

    Key gram;
    for (const auto& w : words) gram.push_back(model.vocab().add(w));
    if (!model.entries(current).emplace(gram, prob).second)
      throw Error(where() + ": duplicate n-gram '" + fields[1] + "'");
    ++read_in_section;
  }
  if (!saw_end) throw Error(source_name + ": missing \\end\\ terminator");
  check_section_complete();
  if (current != order)
    throw Error(strprintf("%s: header declares %d orders but only %d sections present",
                          source_name.c_str(), order, current));
  return model;
}

ArpaModel read_arpa_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_arpa(in, path);
}

}  // namespace lmcomb::ngram
