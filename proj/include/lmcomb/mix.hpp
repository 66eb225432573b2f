#ifndef LMCOMB_MIX_HPP
#define LMCOMB_MIX_HPP

#include <string>
#include <vector>

#include "lmcomb/ngram.hpp"

namespace lmcomb::mix {

// Simplex-constrained interpolation coefficients.
struct MixtureWeights {
  std::vector<double> lambda;

  void validate() const;  // throws unless on the simplex (1e-9)
};

struct MixtureModel {
  std::vector<const ngram::ArpaModel*> components;
  MixtureWeights weights;
};

struct EmResult {
  MixtureWeights weights;
  // ppl_trace[0] is the dev perplexity of the uniform initialization;
  // each following entry is the perplexity after one EM update.
  std::vector<double> ppl_trace;
  int iterations = 0;
};

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-4;       // stop when the PPL improvement drops below this
  double weight_floor = 1e-4;  // applied after convergence, then renormalized
  int threads = 1;
};

// Linear-interpolation EM on the dev text.  Dev perplexity is non-increasing
// from iteration to iteration.  Throws if some dev event has zero
// probability under every component, naming the token.
EmResult estimate_weights_em(const std::vector<const ngram::ArpaModel*>& components,
                             const corpus::NormalizedText& dev_text,
                             const EmOptions& opts = {});

// log10 of sum_i lambda_i * p_i(word | history).  The mixture's event space
// is the union of the component vocabularies: a component that has never
// seen `word` contributes its <unk> mass split evenly over the union words
// it is missing (plus <unk> itself), which keeps every mixture and merged
// distribution summing to one.  With identical vocabularies this reduces to
// the component probability itself.
double mixture_logprob(const MixtureModel& mixture,
                       const std::vector<std::string>& history,
                       const std::string& word);

// The extended per-component probability described above (log10).
double component_logprob(const MixtureModel& mixture, size_t component,
                         const std::vector<std::string>& history,
                         const std::string& word);

double mixture_perplexity(const MixtureModel& mixture,
                          const corpus::NormalizedText& dev_text);

struct RankedComponent {
  size_t index;
  double ppl;
};

// Components ordered by ascending dev perplexity; ties break by index.
std::vector<RankedComponent> rank_by_perplexity(
    const std::vector<const ngram::ArpaModel*>& components,
    const corpus::NormalizedText& dev_text);

// Folds the mixture into a single backoff model over the union of the
// component n-grams, evaluating the interpolated probability at every
// retained n-gram and recomputing backoff weights.
ngram::ArpaModel merge_static(const MixtureModel& mixture);

// Weights file: "component-path<TAB>weight" per line plus a trailing
// "# dev-ppl <value>" comment.
void write_weights_file(const std::string& path,
                        const std::vector<std::string>& component_paths,
                        const MixtureWeights& weights, double dev_ppl);
struct WeightsFile {
  std::vector<std::string> component_paths;
  MixtureWeights weights;
};
WeightsFile read_weights_file(const std::string& path);

}  // namespace lmcomb::mix

#endif  // LMCOMB_MIX_HPP
