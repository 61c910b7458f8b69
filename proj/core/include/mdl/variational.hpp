#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mdl/codelength.hpp"
#include "mdl/dataset.hpp"
#include "mdl/mlp.hpp"
#include "mdl/training.hpp"

namespace mdl {

class Rng;

/// Isotropic Gaussian prior N(0, sigma0^2 I) over the parameters.
struct GaussianPrior {
  double sigma0 = 0.05;
  void validate() const;
};

double softplus(double rho);
double softplus_inverse(double sigma);
/// d softplus / d rho, i.e. the logistic sigmoid.
double softplus_derivative(double rho);

/// Diagonal Gaussian over parameters, sigma_i = log(1 + exp(rho_i)).
/// Stored as one flat vector [mu; rho] so it can be optimised in place.
class MeanFieldPosterior {
 public:
  MeanFieldPosterior(std::vector<double> mu, std::vector<double> rho);
  /// mu given, every sigma_i equal to `sigma`.
  static MeanFieldPosterior centered_at(std::span<const double> mu, double sigma);

  std::size_t dim() const { return values_.size() / 2; }
  std::span<const double> mu() const { return std::span(values_).first(dim()); }
  std::span<const double> rho() const { return std::span(values_).last(dim()); }
  double sigma(std::size_t i) const { return softplus(values_[dim() + i]); }
  std::vector<double> sigmas() const;

  std::span<const double> flat() const { return values_; }
  std::span<double> mutable_flat() { return values_; }

  /// theta = mu + sigma * eps with eps ~ N(0, I) drawn from `rng`.
  std::vector<double> sample(Rng& rng) const;

 private:
  std::vector<double> values_;
};

struct PosteriorGradient {
  std::vector<double> mu;
  std::vector<double> rho;
};

/// KL(beta || alpha) in bits (closed form for diagonal Gaussians).
double kl_to_prior(const MeanFieldPosterior& post, const GaussianPrior& prior);
/// Exact gradient of kl_to_prior with respect to (mu, rho), in bits.
PosteriorGradient kl_gradient(const MeanFieldPosterior& post, const GaussianPrior& prior);

/// f(theta) with its gradient written to `grad`.
using ParamFunction = std::function<double(std::span<const double> theta, std::span<double> grad)>;

struct ExpectationGradient {
  double value = 0.0;  // mean of f over the draws
  PosteriorGradient grad;
};

/// Monte-Carlo estimate of d/d(mu, rho) E_{theta ~ beta}[f(theta)] from
/// `samples` draws:
///   d/dmu_i  ~ mean_s df/dtheta_i(theta^s)
///   d/drho_i ~ sigma'(rho_i) * mean_s df/dtheta_i(theta^s) * (theta_i^s - mu_i) / sigma_i
ExpectationGradient estimate_expectation_gradient(const MeanFieldPosterior& post,
                                                  const ParamFunction& f, std::size_t samples,
                                                  Rng& rng);

struct VariationalEstimate {
  double kl_bits = 0.0;
  double data_bits = 0.0;         // Monte-Carlo mean of the sampled log-loss
  double data_bits_stderr = 0.0;  // 0 when a single draw was used
  std::size_t samples = 0;

  double total_bits() const { return kl_bits + data_bits; }
  Codelength codelength() const;
};

/// KL(beta||alpha) + MC estimate of E_beta[-sum log2 p_theta(y|x)] over `range`.
VariationalEstimate variational_objective(const MeanFieldPosterior& post,
                                          const GaussianPrior& prior, const MlpSpec& family,
                                          const LabeledDataset& data, IndexRange range,
                                          std::size_t mc_samples, std::uint64_t seed);

/// Gradient of the objective over `range` with a single draw (S = 1) for the
/// data term plus the exact KL gradient.
PosteriorGradient variational_gradients(const MeanFieldPosterior& post,
                                        const GaussianPrior& prior, const MlpSpec& family,
                                        const LabeledDataset& data, IndexRange range,
                                        std::uint64_t seed);

/// mu at the deterministic network initialisation, sigma_i = sigma0.
MeanFieldPosterior initial_posterior(const MlpSpec& family, const GaussianPrior& prior);

struct VariationalTraining {
  MeanFieldPosterior posterior;
  std::vector<double> epoch_objectives;  // single-draw estimate after each epoch (0 = init)
  std::size_t best_epoch = 0;
};

/// Minibatch optimisation of the objective with one draw per batch. Returns
/// the posterior with the lowest end-of-epoch objective estimate.
VariationalTraining train_variational(const MlpSpec& family, const GaussianPrior& prior,
                                      const LabeledDataset& data, IndexRange range,
                                      const TrainConfig& config);

/// A network with parameters drawn from the posterior.
Mlp sample_network(const MeanFieldPosterior& post, const MlpSpec& family, std::uint64_t seed);

/// -log2 of the Dirichlet-categorical marginal likelihood of `labels`
/// (the exact Bayesian codelength for an input-free categorical model).
double bayes_codelength_oracle(std::span<const double> pseudocounts,
                               std::span<const Label> labels);

/// Variational codelength of the input-free categorical model when the
/// posterior surrogate is Dirichlet(surrogate) and the prior Dirichlet(pseudocounts):
///   KL(Dir(b) || Dir(a)) + E_{Dir(b)}[-sum log2 theta_{y_i}].
double dirichlet_variational_codelength(std::span<const double> pseudocounts,
                                        std::span<const double> surrogate,
                                        std::span<const Label> labels);

}  // namespace mdl
