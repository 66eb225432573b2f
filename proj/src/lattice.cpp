#include "lmcomb/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lmcomb::lat {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool Lattice::is_final(uint32_t node) const {
  return std::find(finals.begin(), finals.end(), node) != finals.end();
}

void Lattice::validate() {
  auto fail = [&](const std::string& msg) {
    throw Error("lattice " + utt_id + ": " + msg);
  };
  if (num_nodes == 0) fail("no nodes");
  if (finals.empty()) fail("no final nodes");
  for (uint32_t f : finals)
    if (f >= num_nodes) fail(strprintf("final node %u out of range", f));
  out_arcs.assign(num_nodes, {});
  in_arcs.assign(num_nodes, {});
  for (size_t i = 0; i < arcs.size(); ++i) {
    const Arc& a = arcs[i];
    if (a.from >= num_nodes || a.to >= num_nodes)
      fail(strprintf("arc %u->%u out of range", a.from, a.to));
    if (!std::isfinite(a.am) || !std::isfinite(a.lm))
      fail(strprintf("arc %u->%u has non-finite score", a.from, a.to));
    if (a.word.empty()) fail("empty word label");
    out_arcs[a.from].push_back(static_cast<uint32_t>(i));
    in_arcs[a.to].push_back(static_cast<uint32_t>(i));
  }

  // Kahn's algorithm; a leftover node proves a cycle, and the smallest
  // in-cycle back edge is reported.
  std::vector<uint32_t> indeg(num_nodes, 0);
  for (const Arc& a : arcs) ++indeg[a.to];
  std::deque<uint32_t> queue;
  for (uint32_t v = 0; v < num_nodes; ++v)
    if (indeg[v] == 0) queue.push_back(v);
  topo_order.clear();
  while (!queue.empty()) {
    uint32_t v = queue.front();
    queue.pop_front();
    topo_order.push_back(v);
    for (uint32_t ai : out_arcs[v])
      if (--indeg[arcs[ai].to] == 0) queue.push_back(arcs[ai].to);
  }
  if (topo_order.size() != num_nodes) {
    for (const Arc& a : arcs)
      if (indeg[a.from] > 0 && indeg[a.to] > 0)
        fail(strprintf("cycle through arc %u->%u", a.from, a.to));
    fail("cycle detected");
  }

  // Every node must lie on a start-to-final path.
  std::vector<char> fwd(num_nodes, 0);
  fwd[0] = 1;
  for (uint32_t v : topo_order)
    if (fwd[v])
      for (uint32_t ai : out_arcs[v]) fwd[arcs[ai].to] = 1;
  std::vector<char> bwd(num_nodes, 0);
  for (uint32_t f : finals) bwd[f] = 1;
  for (auto it = topo_order.rbegin(); it != topo_order.rend(); ++it)
    if (bwd[*it])
      for (uint32_t ai : in_arcs[*it]) bwd[arcs[ai].from] = 1;
  for (uint32_t v = 0; v < num_nodes; ++v) {
    if (!fwd[v]) fail(strprintf("node %u unreachable from start", v));
    if (!bwd[v]) fail(strprintf("node %u cannot reach a final node", v));
  }
}

std::vector<Lattice> parse_lattices(std::istream& in, const std::string& source_name) {
  std::vector<Lattice> lats;
  std::string line;
  size_t lineno = 0;
  auto where = [&] { return strprintf("%s:%zu", source_name.c_str(), lineno); };

  Lattice cur;
  bool open = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_whitespace(line);
    const std::string& tag = fields[0];
    if (tag == "UTT") {
      if (open) throw Error(where() + ": UTT before END of previous block");
      if (fields.size() != 2) throw Error(where() + ": UTT needs an id");
      cur = Lattice();
      cur.utt_id = fields[1];
      open = true;
    } else if (tag == "NODES") {
      if (!open || fields.size() != 2) throw Error(where() + ": bad NODES record");
      cur.num_nodes = static_cast<uint32_t>(std::strtoul(fields[1].c_str(), nullptr, 10));
    } else if (tag == "ARC") {
      if (!open || fields.size() != 6) throw Error(where() + ": bad ARC record");
      Arc a;
      a.from = static_cast<uint32_t>(std::strtoul(fields[1].c_str(), nullptr, 10));
      a.to = static_cast<uint32_t>(std::strtoul(fields[2].c_str(), nullptr, 10));
      a.word = fields[3];
      a.am = std::strtod(fields[4].c_str(), nullptr);
      a.lm = std::strtod(fields[5].c_str(), nullptr);
      cur.arcs.push_back(std::move(a));
    } else if (tag == "FINAL") {
      if (!open || fields.size() != 2) throw Error(where() + ": bad FINAL record");
      cur.finals.push_back(static_cast<uint32_t>(std::strtoul(fields[1].c_str(), nullptr, 10)));
    } else if (tag == "END") {
      if (!open) throw Error(where() + ": END without UTT");
      try {
        cur.validate();
      } catch (const Error& e) {
        throw Error(strprintf("%s: %s", where().c_str(), e.what()));
      }
      lats.push_back(std::move(cur));
      open = false;
    } else {
      throw Error(where() + ": unknown record tag '" + tag + "'");
    }
  }
  if (open) throw Error(source_name + ": unterminated lattice block for " + cur.utt_id);
  return lats;
}

std::vector<Lattice> parse_lattice_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return parse_lattices(in, path);
}

void write_lattices(const std::vector<Lattice>& lats, std::ostream& out) {
  for (const auto& lat : lats) {
    out << "UTT " << lat.utt_id << "\n";
    out << "NODES " << lat.num_nodes << "\n";
    for (const Arc& a : lat.arcs)
      out << "ARC " << a.from << " " << a.to << " " << a.word << " "
          << strprintf("%.6f", a.am) << " " << strprintf("%.6f", a.lm) << "\n";
    for (uint32_t f : lat.finals) out << "FINAL " << f << "\n";
    out << "END\n";
  }
}

void write_lattice_file(const std::vector<Lattice>& lats, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_lattices(lats, out);
  if (!out) throw Error("write failed for " + path);
}

ScoredPath best_path(const Lattice& lat, double lmwt, double wip) {
  if (lmwt <= 0.0) throw Error("best_path: lmwt must be positive");
  Lattice work = lat;
  work.validate();

  struct NodeBest {
    double score = kNegInf;
    double am = 0.0, lm = 0.0;
    std::vector<std::string> words;
  };
  std::vector<NodeBest> best(work.num_nodes);
  best[0].score = 0.0;
  for (uint32_t v : work.topo_order) {
    if (best[v].score == kNegInf) continue;
    for (uint32_t ai : work.out_arcs[v]) {
      const Arc& a = work.arcs[ai];
      double s = best[v].score + a.am + lmwt * a.lm + (a.is_epsilon() ? 0.0 : wip);
      auto& dst = best[a.to];
      bool better = s > dst.score;
      if (!better && s == dst.score) {
        auto cand = best[v].words;
        if (!a.is_epsilon()) cand.push_back(a.word);
        better = cand < dst.words;
      }
      if (better) {
        dst.score = s;
        dst.am = best[v].am + a.am;
        dst.lm = best[v].lm + a.lm;
        dst.words = best[v].words;
        if (!a.is_epsilon()) dst.words.push_back(a.word);
      }
    }
  }
  const NodeBest* winner = nullptr;
  for (uint32_t f : work.finals) {
    const auto& cand = best[f];
    if (cand.score == kNegInf) continue;
    if (!winner || cand.score > winner->score ||
        (cand.score == winner->score && cand.words < winner->words))
      winner = &cand;
  }
  if (!winner) throw Error("lattice " + lat.utt_id + ": no path reaches a final node");
  ScoredPath out;
  out.words = winner->words;
  out.am = winner->am;
  out.lm = winner->lm;
  out.combined = winner->score;
  return out;
}

double forward_total(const Lattice& lat, double lmwt, double wip) {
  Lattice work = lat;
  work.validate();
  std::vector<double> alpha(work.num_nodes, kNegInf);
  alpha[0] = 0.0;
  for (uint32_t v : work.topo_order) {
    if (alpha[v] == kNegInf) continue;
    for (uint32_t ai : work.out_arcs[v]) {
      const Arc& a = work.arcs[ai];
      double w = a.am + lmwt * a.lm + (a.is_epsilon() ? 0.0 : wip);
      alpha[a.to] = ln_add(alpha[a.to], alpha[v] + w);
    }
  }
  double total = kNegInf;
  for (uint32_t f : work.finals) total = ln_add(total, alpha[f]);
  return total;
}

std::vector<double> arc_posteriors(const Lattice& lat, double lmwt, double wip) {
  Lattice work = lat;
  work.validate();
  std::vector<double> alpha(work.num_nodes, kNegInf);
  std::vector<double> beta(work.num_nodes, kNegInf);
  alpha[0] = 0.0;
  auto arc_weight = [&](const Arc& a) {
    return a.am + lmwt * a.lm + (a.is_epsilon() ? 0.0 : wip);
  };
  for (uint32_t v : work.topo_order) {
    if (alpha[v] == kNegInf) continue;
    for (uint32_t ai : work.out_arcs[v]) {
      const Arc& a = work.arcs[ai];
      alpha[a.to] = ln_add(alpha[a.to], alpha[v] + arc_weight(a));
    }
  }
  for (uint32_t f : work.finals) beta[f] = 0.0;
  for (auto it = work.topo_order.rbegin(); it != work.topo_order.rend(); ++it) {
    for (uint32_t ai : work.out_arcs[*it]) {
      const Arc& a = work.arcs[ai];
      if (beta[a.to] == kNegInf) continue;
      beta[*it] = ln_add(beta[*it], arc_weight(a) + beta[a.to]);
    }
  }
  double total = beta[0];
  std::vector<double> post(work.arcs.size(), 0.0);
  for (size_t i = 0; i < work.arcs.size(); ++i) {
    const Arc& a = work.arcs[i];
    double lp = alpha[a.from] + arc_weight(a) + beta[a.to] - total;
    post[i] = std::exp(lp);
  }
  return post;
}

namespace {

// Exhaustive path enumeration grouped by word sequence.
struct SequenceMass {
  double lse = kNegInf;  // ln-sum of exp(combined) over the group's paths
  double best = kNegInf;
  double best_am = 0.0, best_lm = 0.0;
};

void enumerate_paths(const Lattice& lat, double lmwt, double wip, size_t max_paths,
                     std::map<std::vector<std::string>, SequenceMass>* groups) {
  struct Frame {
    uint32_t node;
    size_t arc_pos;
  };
  size_t paths = 0;
  std::vector<Frame> stack{{0, 0}};
  std::vector<std::string> words;
  std::vector<size_t> word_marks{0};
  double score = 0.0, am = 0.0, lm = 0.0;
  std::vector<double> score_stack{0.0}, am_stack{0.0}, lm_stack{0.0};

  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.arc_pos == 0 && lat.is_final(top.node)) {
      if (++paths > max_paths)
        throw Error("lattice " + lat.utt_id + ": path enumeration bound exceeded");
      auto& g = (*groups)[words];
      g.lse = ln_add(g.lse, score);
      if (score > g.best) {
        g.best = score;
        g.best_am = am;
        g.best_lm = lm;
      }
    }
    if (top.arc_pos < lat.out_arcs[top.node].size()) {
      const Arc& a = lat.arcs[lat.out_arcs[top.node][top.arc_pos]];
      ++top.arc_pos;
      double w = a.am + lmwt * a.lm + (a.is_epsilon() ? 0.0 : wip);
      score += w;
      am += a.am;
      lm += a.lm;
      if (!a.is_epsilon()) words.push_back(a.word);
      stack.push_back({a.to, 0});
      word_marks.push_back(words.size());
      score_stack.push_back(score);
      am_stack.push_back(am);
      lm_stack.push_back(lm);
    } else {
      stack.pop_back();
      word_marks.pop_back();
      score_stack.pop_back();
      am_stack.pop_back();
      lm_stack.pop_back();
      if (!stack.empty()) {
        words.resize(word_marks.back());
        score = score_stack.back();
        am = am_stack.back();
        lm = lm_stack.back();
      }
    }
  }
}

}  // namespace

NBestList nbest(const Lattice& lat, double lmwt, size_t k, const NBestOptions& opts) {
  if (k < 1) throw Error("nbest: k must be >= 1");
  Lattice work = lat;
  work.validate();

  std::map<std::vector<std::string>, SequenceMass> groups;
  enumerate_paths(work, lmwt, opts.wip, opts.max_paths, &groups);
  double total = forward_total(work, lmwt, opts.wip);

  NBestList out;
  out.utt_id = lat.utt_id;
  std::vector<std::pair<const std::vector<std::string>*, const SequenceMass*>> ranked;
  ranked.reserve(groups.size());
  for (const auto& [words, mass] : groups) ranked.push_back({&words, &mass});
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.second->lse != y.second->lse) return x.second->lse > y.second->lse;
    return *x.first < *y.first;
  });
  for (const auto& [words, mass] : ranked) {
    if (out.hyps.size() >= k) break;
    Hypothesis h;
    h.words = *words;
    h.am = mass->best_am;
    h.lm = mass->best_lm;
    h.combined = mass->lse;
    h.posterior = std::exp(mass->lse - total);
    out.hyps.push_back(std::move(h));
  }
  return out;
}

}  // namespace lmcomb::lat
