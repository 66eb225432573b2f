#include <cmath>
#include <deque>
#include <map>

#include "lmcomb/lattice.hpp"

namespace lmcomb::lat {

// State expansion for second-pass rescoring.  Each expanded node is an
// (original node, LM context) pair, where the context is the last order-1
// words on the way in, rooted at <s>.  Word labels outside the model
// vocabulary score as <unk> but keep their surface form on the arc.
Lattice rescore(const Lattice& lat, const ngram::ArpaModel& model) {
  using ngram::Key;
  using ngram::Vocabulary;
  using ngram::WordId;

  Lattice base = lat;
  base.validate();

  const size_t ctx_len = static_cast<size_t>(model.order() - 1);
  const double ln10 = std::log(10.0);

  using State = std::pair<uint32_t, Key>;
  std::map<State, uint32_t> ids;
  std::deque<State> queue;

  Key start_ctx;
  if (ctx_len > 0) start_ctx.push_back(Vocabulary::kBos);
  State start{0, start_ctx};
  ids.emplace(start, 0);
  queue.push_back(start);

  Lattice out;
  out.utt_id = base.utt_id;
  std::vector<char> final_flags;
  final_flags.push_back(base.is_final(0) ? 1 : 0);

  while (!queue.empty()) {
    State cur = std::move(queue.front());
    queue.pop_front();
    uint32_t cur_id = ids.at(cur);
    for (uint32_t ai : base.out_arcs[cur.first]) {
      const Arc& a = base.arcs[ai];
      Arc na;
      na.word = a.word;
      na.am = a.am;
      na.from = cur_id;
      Key next_ctx = cur.second;
      if (a.is_epsilon()) {
        na.lm = 0.0;
      } else {
        WordId w = model.vocab().find_or_unk(a.word);
        na.lm = ln10 * model.logprob(cur.second, w);
        if (ctx_len > 0) {
          next_ctx.push_back(w);
          if (next_ctx.size() > ctx_len)
            next_ctx.erase(next_ctx.begin(),
                           next_ctx.begin() + (next_ctx.size() - ctx_len));
        }
      }
      State nxt{a.to, std::move(next_ctx)};
      auto [it, inserted] = ids.emplace(nxt, static_cast<uint32_t>(ids.size()));
      if (inserted) {
        queue.push_back(it->first);
        final_flags.push_back(base.is_final(a.to) ? 1 : 0);
      }
      na.to = it->second;
      out.arcs.push_back(std::move(na));
    }
  }
  out.num_nodes = static_cast<uint32_t>(ids.size());
  for (uint32_t v = 0; v < out.num_nodes; ++v)
    if (final_flags[v]) out.finals.push_back(v);
  out.validate();
  return out;
}

}  // namespace lmcomb::lat
