#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lmcomb/acoustic.hpp"
#include "lmcomb/util.hpp"

using namespace lmcomb;
using acoustic::DnnPosteriors;
using acoustic::GmmState;
using acoustic::StatePriors;

namespace {

GmmState random_gmm(Rng* rng, size_t components, size_t dim) {
  GmmState st;
  double sum = 0.0;
  for (size_t m = 0; m < components; ++m) {
    double w = rng->uniform(0.1, 1.0);
    st.weights.push_back(w);
    sum += w;
    std::vector<double> mean(dim), var(dim);
    for (size_t d = 0; d < dim; ++d) {
      mean[d] = rng->normal(0.0, 2.0);
      var[d] = rng->uniform(0.3, 2.0);
    }
    st.means.push_back(mean);
    st.vars.push_back(var);
  }
  for (double& w : st.weights) w /= sum;
  // Exact renormalization so validate() accepts the state.
  double s2 = 0.0;
  for (double w : st.weights) s2 += w;
  st.weights.back() += 1.0 - s2;
  return st;
}

// Probability-space evaluation without log-sum-exp, usable at moderate
// magnitudes.
double naive_gmm_loglike(const GmmState& st, const std::vector<double>& obs) {
  double p = 0.0;
  for (size_t m = 0; m < st.weights.size(); ++m) {
    double dens = 1.0;
    for (size_t d = 0; d < obs.size(); ++d) {
      double diff = obs[d] - st.means[m][d];
      dens *= std::exp(-0.5 * diff * diff / st.vars[m][d]) /
              std::sqrt(2.0 * M_PI * st.vars[m][d]);
    }
    p += st.weights[m] * dens;
  }
  return std::log(p);
}

}  // namespace

TEST_CASE("standard normal at the mean gives -0.5 ln(2 pi)") {
  GmmState st;
  st.weights = {1.0};
  st.means = {{0.0}};
  st.vars = {{1.0}};
  CHECK(acoustic::gmm_emission_loglike(st, {0.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-9));
}

TEST_CASE("symmetric two-component mixture collapses to one density") {
  GmmState st;
  st.weights = {0.5, 0.5};
  st.means = {{1.0}, {-1.0}};
  st.vars = {{1.0}, {1.0}};
  // Both components sit at distance 1: 0.5*N(1)+0.5*N(1) = N at distance 1.
  CHECK(acoustic::gmm_emission_loglike(st, {0.0}) ==
        doctest::Approx(-0.9189385332046727 - 0.5).epsilon(1e-9));
}

TEST_CASE("log-sum-exp result matches the naive probability-space sum") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    GmmState st = random_gmm(&rng, 3, 4);
    std::vector<double> obs(4);
    for (auto& x : obs) x = rng.normal(0.0, 2.0);
    double fast = acoustic::gmm_emission_loglike(st, obs);
    double naive = naive_gmm_loglike(st, obs);
    CHECK(fast == doctest::Approx(naive).epsilon(1e-9));
  }
}

TEST_CASE("mixture likelihood is invariant under component permutation") {
  Rng rng(34);
  GmmState st = random_gmm(&rng, 4, 3);
  GmmState rot = st;
  std::rotate(rot.weights.begin(), rot.weights.begin() + 1, rot.weights.end());
  std::rotate(rot.means.begin(), rot.means.begin() + 1, rot.means.end());
  std::rotate(rot.vars.begin(), rot.vars.begin() + 1, rot.vars.end());
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> obs(3);
    for (auto& x : obs) x = rng.normal(0.0, 2.0);
    CHECK(acoustic::gmm_emission_loglike(st, obs) ==
          doctest::Approx(acoustic::gmm_emission_loglike(rot, obs)).epsilon(1e-12));
  }
}

TEST_CASE("boosting the best component never lowers the likelihood") {
  Rng rng(35);
  for (int trial = 0; trial < 50; ++trial) {
    GmmState st = random_gmm(&rng, 3, 2);
    std::vector<double> obs(2);
    for (auto& x : obs) x = rng.normal(0.0, 1.5);
    // Find the best-scoring component.
    size_t best = 0;
    double best_lp = -1e300;
    for (size_t m = 0; m < 3; ++m) {
      GmmState single;
      single.weights = {1.0};
      single.means = {st.means[m]};
      single.vars = {st.vars[m]};
      double lp = acoustic::gmm_emission_loglike(single, obs);
      if (lp > best_lp) {
        best_lp = lp;
        best = m;
      }
    }
    GmmState boosted = st;
    boosted.weights[best] *= 2.0;
    double s = 0.0;
    for (double w : boosted.weights) s += w;
    for (double& w : boosted.weights) w /= s;
    double s2 = 0.0;
    for (double w : boosted.weights) s2 += w;
    boosted.weights.back() += 1.0 - s2;
    CHECK(acoustic::gmm_emission_loglike(boosted, obs) >=
          acoustic::gmm_emission_loglike(st, obs) - 1e-9);
  }
}

TEST_CASE("dimension mismatch is an argument error") {
  GmmState st;
  st.weights = {1.0};
  st.means = {{0.0, 0.0}};
  st.vars = {{1.0, 1.0}};
  CHECK_THROWS_AS(acoustic::gmm_emission_loglike(st, {0.0}), Error);
}

TEST_CASE("pseudo log-likelihood forced values and identity") {
  DnnPosteriors post;
  post.frames = {{0.25, 0.5, 0.25}};
  StatePriors priors;
  priors.priors = {0.25, 0.25, 0.5};
  CHECK(acoustic::pseudo_loglike(post, priors, 0, 0) == doctest::Approx(0.0));
  CHECK(acoustic::pseudo_loglike(post, priors, 1, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  priors.priors = {0.25, 0.0, 0.75};
  CHECK_THROWS_AS(acoustic::pseudo_loglike(post, priors, 1, 0), Error);
}

TEST_CASE("pseudo log-likelihood plus log prior recovers the posterior") {
  Rng rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    size_t states = 2 + rng.below(5);
    DnnPosteriors post;
    StatePriors priors;
    std::vector<double> p(states), q(states);
    double sp = 0.0, sq = 0.0;
    for (size_t j = 0; j < states; ++j) {
      p[j] = rng.uniform(0.05, 1.0);
      q[j] = rng.uniform(0.05, 1.0);
      sp += p[j];
      sq += q[j];
    }
    for (size_t j = 0; j < states; ++j) {
      p[j] /= sp;
      q[j] /= sq;
    }
    post.frames = {p};
    priors.priors = q;
    double recovered = 0.0;
    for (size_t j = 0; j < states; ++j) {
      double pll = acoustic::pseudo_loglike(post, priors, j, 0);
      CHECK(pll + std::log(q[j]) == doctest::Approx(std::log(p[j])).epsilon(1e-12));
      recovered += std::exp(pll) * q[j];
    }
    CHECK(recovered == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("estimate_priors: add-one smoothing over the declared states") {
  auto priors = acoustic::estimate_priors({0, 0, 1}, 2);
  CHECK(priors.priors[0] == doctest::Approx(3.0 / 5).epsilon(1e-12));
  CHECK(priors.priors[1] == doctest::Approx(2.0 / 5).epsilon(1e-12));

  auto single = acoustic::estimate_priors({0, 0, 0}, 1);
  CHECK(single.priors[0] == doctest::Approx(1.0).epsilon(1e-12));

  auto a = acoustic::estimate_priors({0, 1, 1, 2}, 3);
  auto b = acoustic::estimate_priors({2, 1, 0, 1}, 3);
  for (size_t j = 0; j < 3; ++j)
    CHECK(a.priors[j] == doctest::Approx(b.priors[j]).epsilon(1e-15));

  CHECK_THROWS_AS(acoustic::estimate_priors({}, 2), Error);
}
