#include "lmcomb/acoustic.hpp"

#include <cmath>
#include <limits>

#include "lmcomb/util.hpp"

namespace lmcomb::acoustic {

void GmmState::validate() const {
  if (weights.empty() || weights.size() != means.size() || weights.size() != vars.size())
    throw Error("GmmState: component count mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error("GmmState: negative mixing weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("GmmState: weights must sum to 1");
  const size_t dim = means[0].size();
  for (size_t m = 0; m < means.size(); ++m) {
    if (means[m].size() != dim || vars[m].size() != dim)
      throw Error("GmmState: dimension mismatch across components");
    for (double v : vars[m])
      if (v <= 0.0) throw Error("GmmState: variances must be positive");
  }
}

double gmm_emission_loglike(const GmmState& state, const std::vector<double>& obs) {
  state.validate();
  if (obs.size() != state.means[0].size())
    throw Error("gmm_emission_loglike: observation dimension mismatch");
  const double log_2pi = std::log(2.0 * M_PI);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> comp_log(state.weights.size());
  for (size_t m = 0; m < state.weights.size(); ++m) {
    if (state.weights[m] <= 0.0) {
      comp_log[m] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lp = std::log(state.weights[m]);
    for (size_t d = 0; d < obs.size(); ++d) {
      double diff = obs[d] - state.means[m][d];
      lp -= 0.5 * (log_2pi + std::log(state.vars[m][d]) + diff * diff / state.vars[m][d]);
    }
    comp_log[m] = lp;
    best = std::max(best, lp);
  }
  double sum = 0.0;
  for (double lp : comp_log) sum += std::exp(lp - best);
  return best + std::log(sum);
}

double pseudo_loglike(const DnnPosteriors& posteriors, const StatePriors& priors,
                      size_t state, size_t frame) {
  if (frame >= posteriors.frames.size())
    throw Error("pseudo_loglike: frame out of range");
  if (state >= posteriors.frames[frame].size() || state >= priors.priors.size())
    throw Error("pseudo_loglike: state out of range");
  double prior = priors.priors[state];
  if (prior <= 0.0) throw Error("pseudo_loglike: zero state prior");
  return std::log(posteriors.frames[frame][state]) - std::log(prior);
}

StatePriors estimate_priors(const std::vector<uint32_t>& alignment, size_t num_states) {
  if (alignment.empty()) throw Error("estimate_priors: empty alignment");
  if (num_states == 0) throw Error("estimate_priors: no states declared");
  std::vector<uint64_t> counts(num_states, 0);
  for (uint32_t s : alignment) {
    if (s >= num_states) throw Error("estimate_priors: state id out of range");
    ++counts[s];
  }
  StatePriors out;
  out.priors.resize(num_states);
  double denom = static_cast<double>(alignment.size() + num_states);
  for (size_t j = 0; j < num_states; ++j)
    out.priors[j] = static_cast<double>(counts[j] + 1) / denom;
  return out;
}

}  // namespace lmcomb::acoustic
