#ifndef LMCOMB_ACOUSTIC_HPP
#define LMCOMB_ACOUSTIC_HPP

#include <cstdint>
#include <vector>

namespace lmcomb::acoustic {

// Diagonal-covariance Gaussian mixture for one tied state.
struct GmmState {
  std::vector<double> weights;             // simplex over components
  std::vector<std::vector<double>> means;  // [component][dim]
  std::vector<std::vector<double>> vars;   // [component][dim], positive

  void validate() const;
};

struct StatePriors {
  std::vector<double> priors;  // simplex over states
};

struct DnnPosteriors {
  // frames[t][j] = p(state j | observation t); each frame sums to one.
  std::vector<std::vector<double>> frames;
};

// Natural-log likelihood log sum_m pi_m N(obs; mean_m, var_m), evaluated
// with log-sum-exp stabilization.
double gmm_emission_loglike(const GmmState& state, const std::vector<double>& obs);

// Natural-log pseudo-likelihood log p(s|o_t) - log p(s).
double pseudo_loglike(const DnnPosteriors& posteriors, const StatePriors& priors,
                      size_t state, size_t frame);

// Relative state frequencies with add-one smoothing over num_states states.
StatePriors estimate_priors(const std::vector<uint32_t>& alignment, size_t num_states);

}  // namespace lmcomb::acoustic

#endif  // LMCOMB_ACOUSTIC_HPP
