#include "mdl/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "mdl/errors.hpp"
#include "mdl/rng.hpp"

namespace mdl {

namespace {

constexpr double kLn2 = std::numbers::ln2;

struct Draw {
  std::vector<double> theta;
  std::vector<double> eps;
};

Draw draw(const MeanFieldPosterior& post, Rng& rng) {
  const std::size_t d = post.dim();
  Draw out{std::vector<double>(d), std::vector<double>(d)};
  const auto mu = post.mu();
  const auto rho = post.rho();
  for (std::size_t i = 0; i < d; ++i) {
    out.eps[i] = rng.normal();
    out.theta[i] = mu[i] + softplus(rho[i]) * out.eps[i];
  }
  return out;
}

void check_dims(const MeanFieldPosterior& post, const MlpSpec& family) {
  if (post.dim() != family.num_params()) {
    throw ConfigError("posterior has " + std::to_string(post.dim()) +
                      " coordinates, model family has " + std::to_string(family.num_params()) +
                      " parameters");
  }
}

}  // namespace

void GaussianPrior::validate() const {
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("prior sigma0 must be > 0");
}

double softplus(double rho) {
  if (rho > 30.0) return rho + std::log1p(std::exp(-rho));
  return std::log1p(std::exp(rho));
}

double softplus_inverse(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("softplus inverse needs sigma > 0");
  if (sigma > 30.0) return sigma + std::log(-std::expm1(-sigma));
  return std::log(std::expm1(sigma));
}

double softplus_derivative(double rho) {
  if (rho >= 0.0) return 1.0 / (1.0 + std::exp(-rho));
  const double e = std::exp(rho);
  return e / (1.0 + e);
}

MeanFieldPosterior::MeanFieldPosterior(std::vector<double> mu, std::vector<double> rho) {
  if (mu.size() != rho.size()) throw ConfigError("posterior mu and rho lengths differ");
  values_ = std::move(mu);
  values_.insert(values_.end(), rho.begin(), rho.end());
  for (std::size_t i = 0; i < dim(); ++i) {
    if (!(sigma(i) > 0.0)) throw ConfigError("posterior sigma must be positive");
  }
}

MeanFieldPosterior MeanFieldPosterior::centered_at(std::span<const double> mu, double sigma) {
  return MeanFieldPosterior(std::vector<double>(mu.begin(), mu.end()),
                            std::vector<double>(mu.size(), softplus_inverse(sigma)));
}

std::vector<double> MeanFieldPosterior::sigmas() const {
  std::vector<double> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) out[i] = sigma(i);
  return out;
}

std::vector<double> MeanFieldPosterior::sample(Rng& rng) const { return draw(*this, rng).theta; }

double kl_to_prior(const MeanFieldPosterior& post, const GaussianPrior& prior) {
  prior.validate();
  const double var0 = prior.sigma0 * prior.sigma0;
  const auto mu = post.mu();
  CompensatedSum acc;
  for (std::size_t i = 0; i < post.dim(); ++i) {
    const double s = post.sigma(i);
    acc.add(std::log(prior.sigma0 / s) + (s * s - var0) / (2.0 * var0) +
            mu[i] * mu[i] / (2.0 * var0));
  }
  // Non-negative analytically; rounding near beta == alpha can dip below zero.
  return std::max(0.0, acc.value() / kLn2);
}

PosteriorGradient kl_gradient(const MeanFieldPosterior& post, const GaussianPrior& prior) {
  prior.validate();
  const double var0 = prior.sigma0 * prior.sigma0;
  const auto mu = post.mu();
  const auto rho = post.rho();
  PosteriorGradient g{std::vector<double>(post.dim()), std::vector<double>(post.dim())};
  for (std::size_t i = 0; i < post.dim(); ++i) {
    const double s = softplus(rho[i]);
    g.mu[i] = mu[i] / var0 / kLn2;
    g.rho[i] = (-1.0 / s + s / var0) * softplus_derivative(rho[i]) / kLn2;
  }
  return g;
}

ExpectationGradient estimate_expectation_gradient(const MeanFieldPosterior& post,
                                                  const ParamFunction& f, std::size_t samples,
                                                  Rng& rng) {
  if (samples == 0) throw ConfigError("need at least one Monte-Carlo sample");
  const std::size_t d = post.dim();
  ExpectationGradient out{0.0, {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)}};
  std::vector<double> g(d);
  const auto rho = post.rho();
  for (std::size_t s = 0; s < samples; ++s) {
    const Draw x = draw(post, rng);
    std::fill(g.begin(), g.end(), 0.0);
    out.value += f(x.theta, g);
    for (std::size_t i = 0; i < d; ++i) {
      out.grad.mu[i] += g[i];
      // (theta_i - mu_i) / sigma_i is exactly the standard normal draw.
      out.grad.rho[i] += g[i] * x.eps[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(samples);
  out.value *= inv;
  for (std::size_t i = 0; i < d; ++i) {
    out.grad.mu[i] *= inv;
    out.grad.rho[i] *= inv * softplus_derivative(rho[i]);
  }
  return out;
}

Codelength VariationalEstimate::codelength() const {
  return Codelength({{"kl(beta||alpha)", kl_bits}, {"expected data bits", data_bits}});
}

VariationalEstimate variational_objective(const MeanFieldPosterior& post,
                                          const GaussianPrior& prior, const MlpSpec& family,
                                          const LabeledDataset& data, IndexRange range,
                                          std::size_t mc_samples, std::uint64_t seed) {
  if (mc_samples == 0) throw ConfigError("variational objective needs mc_samples >= 1");
  check_dims(post, family);
  Rng rng(seed);
  std::vector<double> losses;
  losses.reserve(mc_samples);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const Mlp net(family, post.sample(rng));
    losses.push_back(log_loss_bits(net, data, range));
  }
  VariationalEstimate est;
  est.kl_bits = kl_to_prior(post, prior);
  est.samples = mc_samples;
  CompensatedSum sum;
  for (double l : losses) sum.add(l);
  est.data_bits = sum.value() / static_cast<double>(mc_samples);
  if (mc_samples > 1) {
    double ss = 0.0;
    for (double l : losses) ss += (l - est.data_bits) * (l - est.data_bits);
    est.data_bits_stderr =
        std::sqrt(ss / static_cast<double>(mc_samples - 1) / static_cast<double>(mc_samples));
  }
  return est;
}

PosteriorGradient variational_gradients(const MeanFieldPosterior& post,
                                        const GaussianPrior& prior, const MlpSpec& family,
                                        const LabeledDataset& data, IndexRange range,
                                        std::uint64_t seed) {
  check_dims(post, family);
  Rng rng(seed);
  const auto inputs = data.rows(range);
  const auto labels = data.labels(range);
  const ParamFunction f = [&](std::span<const double> theta, std::span<double> grad) {
    return Mlp::loss_and_gradient(family, theta, inputs, labels, grad);
  };
  ExpectationGradient est = estimate_expectation_gradient(post, f, 1, rng);
  const PosteriorGradient kl = kl_gradient(post, prior);
  for (std::size_t i = 0; i < post.dim(); ++i) {
    est.grad.mu[i] += kl.mu[i];
    est.grad.rho[i] += kl.rho[i];
  }
  return std::move(est.grad);
}

MeanFieldPosterior initial_posterior(const MlpSpec& family, const GaussianPrior& prior) {
  prior.validate();
  const Mlp init(family);
  return MeanFieldPosterior::centered_at(init.params(), prior.sigma0);
}

VariationalTraining train_variational(const MlpSpec& family, const GaussianPrior& prior,
                                      const LabeledDataset& data, IndexRange range,
                                      const TrainConfig& config) {
  family.validate_for(data);
  prior.validate();
  MeanFieldPosterior post = initial_posterior(family, prior);
  const std::size_t d = post.dim();
  const double n = static_cast<double>(range.size());

  VariationalTraining result{post, {}, 0};
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> theta_grad(d);
  std::vector<double> eps(d);
  std::vector<double> theta(d);

  const BatchGradient batch_gradient = [&](std::span<const double> flat, MatrixRef x,
                                           std::span<const Label> y, std::span<double> grad,
                                           Rng& rng) {
    const auto mu = flat.first(d);
    const auto rho = flat.last(d);
    for (std::size_t i = 0; i < d; ++i) {
      eps[i] = rng.normal();
      theta[i] = mu[i] + softplus(rho[i]) * eps[i];
    }
    const double batch_bits = Mlp::loss_and_gradient(family, theta, x, y, theta_grad);
    // The optimiser divides by the batch size, so the KL term is weighted by
    // batch/n to make each step an unbiased estimate of (objective / n).
    const double kl_weight = static_cast<double>(y.size()) / n;
    const double var0 = prior.sigma0 * prior.sigma0;
    double kl_nats = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double s = softplus(rho[i]);
      const double ds = softplus_derivative(rho[i]);
      grad[i] = theta_grad[i] + kl_weight * mu[i] / var0 / kLn2;
      grad[d + i] =
          theta_grad[i] * eps[i] * ds + kl_weight * (-1.0 / s + s / var0) * ds / kLn2;
      kl_nats += std::log(prior.sigma0 / s) + (s * s - var0) / (2.0 * var0) +
                 mu[i] * mu[i] / (2.0 * var0);
    }
    return batch_bits + kl_weight * kl_nats / kLn2;
  };

  const EpochHook hook = [&](std::size_t epoch, std::span<const double> flat) {
    const MeanFieldPosterior current(std::vector<double>(flat.begin(), flat.begin() + d),
                                     std::vector<double>(flat.begin() + d, flat.end()));
    const double objective =
        variational_objective(current, prior, family, data, range, 1,
                              derive_seed(config.seed, "variational-epoch", epoch))
            .total_bits();
    result.epoch_objectives.push_back(objective);
    if (objective < best) {
      best = objective;
      result.best_epoch = epoch;
      result.posterior = current;
    }
  };

  std::vector<double> flat(post.flat().begin(), post.flat().end());
  optimize(flat, config, data, range, batch_gradient, hook);
  return result;
}

Mlp sample_network(const MeanFieldPosterior& post, const MlpSpec& family, std::uint64_t seed) {
  check_dims(post, family);
  Rng rng(seed);
  return Mlp(family, post.sample(rng));
}

double bayes_codelength_oracle(std::span<const double> pseudocounts,
                               std::span<const Label> labels) {
  const std::size_t k = pseudocounts.size();
  if (k < 2) throw ConfigError("Bayes oracle needs K >= 2");
  std::vector<double> counts(k, 0.0);
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw ConfigError("label outside support");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  double alpha_total = 0.0;
  double log_marginal = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(pseudocounts[j] > 0.0)) throw ConfigError("pseudocounts must be positive");
    alpha_total += pseudocounts[j];
    log_marginal += std::lgamma(pseudocounts[j] + counts[j]) - std::lgamma(pseudocounts[j]);
  }
  log_marginal += std::lgamma(alpha_total) -
                  std::lgamma(alpha_total + static_cast<double>(labels.size()));
  return -log_marginal / kLn2;
}

double dirichlet_variational_codelength(std::span<const double> pseudocounts,
                                        std::span<const double> surrogate,
                                        std::span<const Label> labels) {
  const std::size_t k = pseudocounts.size();
  if (surrogate.size() != k || k < 2) throw ConfigError("Dirichlet parameter sizes differ");
  using boost::math::digamma;
  double a_total = 0.0;
  double b_total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(pseudocounts[j] > 0.0) || !(surrogate[j] > 0.0)) {
      throw ConfigError("Dirichlet parameters must be positive");
    }
    a_total += pseudocounts[j];
    b_total += surrogate[j];
  }
  double kl = std::lgamma(b_total) - std::lgamma(a_total);
  for (std::size_t j = 0; j < k; ++j) {
    kl += std::lgamma(pseudocounts[j]) - std::lgamma(surrogate[j]) +
          (surrogate[j] - pseudocounts[j]) * (digamma(surrogate[j]) - digamma(b_total));
  }
  double expected_nats = 0.0;
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw ConfigError("label outside support");
    expected_nats += digamma(b_total) - digamma(surrogate[static_cast<std::size_t>(y)]);
  }
  return (std::max(0.0, kl) + expected_nats) / kLn2;
}

}  // namespace mdl
