#include "riaft/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "riaft/special.hpp"

namespace riaft {

namespace {

struct CenteredLik {
  // log-likelihood, gradient and Hessian of the censored log-normal model in
  // (mu, s = log sigma)
  const std::vector<double>& logy;
  const std::vector<int>& delta;

  double loglik(double mu, double s) const {
    const double sigma = std::exp(s);
    double ll = 0.0;
    for (std::size_t i = 0; i < logy.size(); ++i) {
      const double w = (logy[i] - mu) / sigma;
      if (delta[i] == 1)
        ll += -s - 0.5 * w * w;
      else
        ll += std::log(std::max(normal_sf(w), 1e-300));
    }
    return ll;
  }

  void grad_hess(double mu, double s, double g[2], double h[3]) const {
    const double sigma = std::exp(s);
    g[0] = g[1] = 0.0;
    h[0] = h[1] = h[2] = 0.0;  // h = [d2mu, dmu ds, d2s]
    for (std::size_t i = 0; i < logy.size(); ++i) {
      const double w = (logy[i] - mu) / sigma;
      if (delta[i] == 1) {
        g[0] += w / sigma;
        g[1] += w * w - 1.0;
        h[0] += -1.0 / (sigma * sigma);
        h[1] += -2.0 * w / sigma;
        h[2] += -2.0 * w * w;
      } else {
        const double hz = normal_hazard(w);
        const double hp = hz * (hz - w);  // d/dw of the hazard
        g[0] += hz / sigma;
        g[1] += w * hz;
        h[0] += -hp / (sigma * sigma);
        h[1] += -(w * hp + hz) / sigma;
        h[2] += -w * hz - w * w * hp;
      }
    }
  }
};

}  // namespace

CenteringConstants center_responses(const SurvivalDataset& ds) {
  std::size_t n_events = 0;
  for (int d : ds.delta) n_events += d;
  if (n_events == 0) throw DataError("center_responses: all observations censored");
  if (n_events < 2) throw DataError("center_responses: need at least 2 uncensored observations");

  std::vector<double> logy(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) logy[i] = std::log(ds.y[i]);

  // moment start from the uncensored part
  double mu = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.delta[i]) mu += logy[i];
  mu /= static_cast<double>(n_events);
  double ss = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.delta[i]) ss += (logy[i] - mu) * (logy[i] - mu);
  double sigma = std::sqrt(ss / static_cast<double>(n_events));

  CenteringConstants out;
  constexpr double kSigmaFloor = 1e-8;
  if (sigma < kSigmaFloor) {
    out.mu_aft = mu;
    out.sigma_aft = kSigmaFloor;
    out.degenerate_scale = true;
    return out;
  }

  const CenteredLik lik{logy, ds.delta};
  double s = std::log(sigma);
  double ll = lik.loglik(mu, s);
  bool converged = false;
  // the summed-gradient norm bottoms out at roundoff ~ n*eps, so the
  // tolerance is per observation (absolute for small samples)
  const double gtol = 1e-8 * std::max(1.0, static_cast<double>(ds.n()));
  for (int it = 0; it < 100; ++it) {
    double g[2], h[3];
    lik.grad_hess(mu, s, g, h);
    if (std::sqrt(g[0] * g[0] + g[1] * g[1]) < gtol) {
      converged = true;
      break;
    }
    // Newton step on the 2x2 system; fall back to gradient if singular
    const double det = h[0] * h[2] - h[1] * h[1];
    double dmu, dss;
    if (std::fabs(det) > 1e-300) {
      dmu = -(h[2] * g[0] - h[1] * g[1]) / det;
      dss = -(-h[1] * g[0] + h[0] * g[1]) / det;
    } else {
      dmu = g[0];
      dss = g[1];
    }
    double step = 1.0;
    for (int half = 0; half < 40; ++half) {
      const double ll_new = lik.loglik(mu + step * dmu, s + step * dss);
      if (ll_new > ll - 1e-14) {
        mu += step * dmu;
        s += step * dss;
        ll = ll_new;
        break;
      }
      step *= 0.5;
      if (half == 39) step = 0.0;
    }
    if (step == 0.0) {
      // the line search has hit the log-likelihood's rounding noise; a tiny
      // per-observation gradient at that point is the numerical optimum
      converged = std::sqrt(g[0] * g[0] + g[1] * g[1]) < 1e-6 * std::max(1.0, static_cast<double>(ds.n()));
      break;
    }
  }

  if (!converged) {
    // profile search: golden section over mu, inner golden section over s
    out.newton_fallback = true;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto profile = [&](double mu_try) {
      double lo = std::log(kSigmaFloor), hi = std::log(1e4);
      double a = lo, bnd = hi;
      double x1 = bnd - phi * (bnd - a), x2 = a + phi * (bnd - a);
      double f1 = lik.loglik(mu_try, x1), f2 = lik.loglik(mu_try, x2);
      for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + phi * (bnd - a);
          f2 = lik.loglik(mu_try, x2);
        } else {
          bnd = x2;
          x2 = x1;
          f2 = f1;
          x1 = bnd - phi * (bnd - a);
          f1 = lik.loglik(mu_try, x1);
        }
      }
      return std::make_pair(std::max(f1, f2), f1 > f2 ? x1 : x2);
    };
    const auto [lo_it, hi_it] = std::minmax_element(logy.begin(), logy.end());
    double a = *lo_it - 5.0, bnd = *hi_it + 5.0;
    double x1 = bnd - phi * (bnd - a), x2 = a + phi * (bnd - a);
    auto p1 = profile(x1), p2 = profile(x2);
    for (int it = 0; it < 200; ++it) {
      if (p1.first < p2.first) {
        a = x1;
        x1 = x2;
        p1 = p2;
        x2 = a + phi * (bnd - a);
        p2 = profile(x2);
      } else {
        bnd = x2;
        x2 = x1;
        p2 = p1;
        x1 = bnd - phi * (bnd - a);
        p1 = profile(x1);
      }
    }
    mu = p1.first > p2.first ? x1 : x2;
    s = p1.first > p2.first ? p1.second : p2.second;
    std::fprintf(stderr, "center_responses: Newton did not converge; profile search used\n");
  }

  out.mu_aft = mu;
  out.sigma_aft = std::max(std::exp(s), kSigmaFloor);
  out.degenerate_scale = out.sigma_aft <= kSigmaFloor;
  return out;
}

double gibbs_update_b(double tau2, double alpha, double sigma2, double resid_sum, std::size_t n_k, Rng& rng) {
  if (!(tau2 > 0.0) || !(alpha > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("gibbs_update_b: tau2, alpha, sigma2 must be positive");
  const double ta = tau2 * alpha;
  const double denom = static_cast<double>(n_k) * ta + sigma2;
  const double mean = ta * resid_sum / denom;
  const double var = sigma2 * ta / denom;
  return rng.normal(mean, std::sqrt(var));
}

double gibbs_update_alpha(const std::vector<double>& b, double tau2, Rng& rng) {
  if (!(tau2 > 0.0)) throw std::invalid_argument("gibbs_update_alpha: tau2 must be positive");
  double sum_b2 = 0.0;
  for (double v : b) sum_b2 += v * v;
  return rng.inv_gamma(1.0, 1.0 + sum_b2 / (2.0 * tau2));
}

double gibbs_update_tau2(const std::vector<double>& b, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gibbs_update_tau2: alpha must be positive");
  double sum_b2 = 0.0;
  for (double v : b) sum_b2 += v * v;
  const double shape = 0.5 * static_cast<double>(b.size()) + 1.0;
  const double scale = (sum_b2 + 2.0 * alpha) / (2.0 * alpha);
  return rng.inv_gamma(shape, scale);
}

void augment_censored(RiaftState& state, const SurvivalDataset& ds, const std::vector<double>& log_y_cent,
                      Rng& rng) {
  const auto& fit = state.forest.training_fit();
  const double sigma = std::sqrt(state.forest.sigma2());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.delta[i] == 1) continue;
    const double loc = fit[i] + state.b[static_cast<std::size_t>(ds.cluster[i] - 1)];
    state.z[i] = rng.trunc_normal_lower(loc, sigma, log_y_cent[i]);
  }
}

PosteriorDraws run_chain(const SurvivalDataset& ds, const ChainConfig& config) {
  ds.check_invariants(/*allow_empty_clusters=*/true);
  if (config.draws <= config.burn_in) throw std::invalid_argument("run_chain: draws must exceed burn_in");

  const std::size_t n = ds.n();
  const std::size_t K = static_cast<std::size_t>(ds.n_clusters);

  RiaftState state;
  state.centering = center_responses(ds);

  std::vector<double> log_y_cent(n);
  for (std::size_t i = 0; i < n; ++i) log_y_cent[i] = std::log(ds.y[i]) - state.centering.mu_aft;

  PredictorMatrix X = PredictorMatrix::from_dataset(ds, /*include_treatment=*/ds.has_treatment());

  BartHyper hyper = config.hyper;
  if (hyper.lambda <= 0.0) {
    // prior scale from the centering fit: P(sigma < sigma_aft) = 0.9
    const double s2 = state.centering.sigma_aft * state.centering.sigma_aft;
    hyper.lambda = s2 * chi2_quantile(0.10, hyper.nu) / hyper.nu;
  }
  state.forest = Forest::init(config.m, log_y_cent, X, hyper);
  state.b.assign(K, 0.0);
  state.tau2 = 1.0;
  state.alpha = 1.0;
  state.z = log_y_cent;

  std::vector<std::size_t> cluster_of(n);
  for (std::size_t i = 0; i < n; ++i) cluster_of[i] = static_cast<std::size_t>(ds.cluster[i] - 1);
  const auto n_k = ds.cluster_sizes();

  Rng rng(config.seed);

  PosteriorDraws out;
  out.seed = config.seed;
  out.total_draws = config.draws;
  out.burn_in = config.burn_in;
  out.centering = state.centering;
  out.n_rows = n;
  out.n_clusters = ds.n_clusters;
  for (const auto& c : X.schema()) out.predictor_names.push_back(c.name);
  const std::size_t kept = static_cast<std::size_t>(config.draws - config.burn_in);
  out.iteration.reserve(kept);
  out.b.reserve(kept);
  out.tau2.reserve(kept);
  out.sigma2.reserve(kept);
  out.alpha.reserve(kept);
  out.vip.reserve(kept);
  if (config.keep_f) out.f.reserve(kept);
  if (config.keep_forests) out.forests.reserve(kept);

  std::vector<double> resid_sum(K);
  std::vector<double> work(n);

  for (int iter = 1; iter <= config.draws; ++iter) {
    // (1) random intercepts, then tau2, then alpha
    std::fill(resid_sum.begin(), resid_sum.end(), 0.0);
    const auto& fit = state.forest.training_fit();
    for (std::size_t i = 0; i < n; ++i) resid_sum[cluster_of[i]] += state.z[i] - fit[i];
    for (std::size_t k = 0; k < K; ++k)
      state.b[k] = gibbs_update_b(state.tau2, state.alpha, state.forest.sigma2(), resid_sum[k], n_k[k], rng);
    state.tau2 = gibbs_update_tau2(state.b, state.alpha, rng);
    state.alpha = gibbs_update_alpha(state.b, state.tau2, rng);

    // (2) backfit the trees on the de-clustered responses
    for (std::size_t i = 0; i < n; ++i) work[i] = state.z[i] - state.b[cluster_of[i]];
    state.forest.backfit_sweep(X, work, rng);

    // (3) redraw censored responses
    augment_censored(state, ds, log_y_cent, rng);

    if (config.heartbeat_every > 0 && iter % config.heartbeat_every == 0)
      std::fprintf(stderr, "riaft chain seed=%llu iter %d/%d\n", static_cast<unsigned long long>(config.seed), iter,
                   config.draws);

    if (iter <= config.burn_in) continue;

    out.iteration.push_back(iter);
    out.b.push_back(state.b);
    out.tau2.push_back(state.tau2);
    out.sigma2.push_back(state.forest.sigma2());
    out.alpha.push_back(state.alpha);
    out.vip.push_back(state.forest.vip());
    if (config.keep_f) {
      // fresh scatter so stored values equal a routed prediction exactly
      std::vector<double> f_now(n, 0.0);
      for (int h = 0; h < state.forest.m(); ++h) state.forest.tree(h).add_training_fit(f_now);
      for (double& v : f_now) v += state.centering.mu_aft;
      out.f.push_back(std::move(f_now));
    }
    if (config.keep_forests) out.forests.push_back(state.forest.compact_copy());
  }
  return out;
}

std::vector<std::vector<double>> predict_posterior(const PosteriorDraws& draws, const PredictorMatrix& rows) {
  if (!draws.has_forests())
    throw std::runtime_error("predict_posterior: draws were saved without forests (rerun fit with keep_forests)");
  std::vector<std::vector<double>> out;
  out.reserve(draws.forests.size());
  for (std::size_t d = 0; d < draws.forests.size(); ++d) {
    auto f = draws.forests[d].predict(rows);
    const double mu = draws.mu_for_draw(d);
    for (double& v : f) v += mu;
    out.push_back(std::move(f));
  }
  return out;
}

void save_draws(const PosteriorDraws& draws, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("save_draws: cannot write " + path);
  nlohmann::json hdr;
  hdr["type"] = "riaft-draws";
  hdr["version"] = 1;
  hdr["seed"] = draws.seed;
  hdr["total_draws"] = draws.total_draws;
  hdr["burn_in"] = draws.burn_in;
  hdr["centering"] = {{"mu_aft", draws.centering.mu_aft},
                      {"sigma_aft", draws.centering.sigma_aft},
                      {"degenerate_scale", draws.centering.degenerate_scale},
                      {"newton_fallback", draws.centering.newton_fallback}};
  hdr["predictors"] = draws.predictor_names;
  hdr["n_rows"] = draws.n_rows;
  hdr["n_clusters"] = draws.n_clusters;
  hdr["has_f"] = !draws.f.empty();
  hdr["has_forests"] = draws.has_forests();
  outf << hdr.dump() << '\n';
  for (std::size_t d = 0; d < draws.n_kept(); ++d) {
    nlohmann::json rec;
    rec["iter"] = draws.iteration[d];
    rec["b"] = draws.b[d];
    rec["tau2"] = draws.tau2[d];
    rec["sigma2"] = draws.sigma2[d];
    rec["alpha"] = draws.alpha[d];
    rec["vip"] = draws.vip[d];
    if (!draws.mu_offset.empty()) rec["mu"] = draws.mu_offset[d];
    if (!draws.f.empty()) rec["f"] = draws.f[d];
    if (draws.has_forests()) rec["forest"] = draws.forests[d].serialize();
    outf << rec.dump() << '\n';
  }
}

PosteriorDraws load_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_draws: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_draws: empty file " + path);
  const nlohmann::json hdr = nlohmann::json::parse(line);
  PosteriorDraws d;
  d.seed = hdr["seed"].get<std::uint64_t>();
  d.total_draws = hdr["total_draws"].get<int>();
  d.burn_in = hdr["burn_in"].get<int>();
  d.centering.mu_aft = hdr["centering"]["mu_aft"].get<double>();
  d.centering.sigma_aft = hdr["centering"]["sigma_aft"].get<double>();
  d.centering.degenerate_scale = hdr["centering"]["degenerate_scale"].get<bool>();
  d.centering.newton_fallback = hdr["centering"]["newton_fallback"].get<bool>();
  d.predictor_names = hdr["predictors"].get<std::vector<std::string>>();
  d.n_rows = hdr["n_rows"].get<std::size_t>();
  d.n_clusters = hdr["n_clusters"].get<int>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    d.iteration.push_back(rec["iter"].get<int>());
    d.b.push_back(rec["b"].get<std::vector<double>>());
    d.tau2.push_back(rec["tau2"].get<double>());
    d.sigma2.push_back(rec["sigma2"].get<double>());
    d.alpha.push_back(rec["alpha"].get<double>());
    d.vip.push_back(rec["vip"].get<std::vector<double>>());
    if (rec.contains("mu")) d.mu_offset.push_back(rec["mu"].get<double>());
    if (rec.contains("f")) d.f.push_back(rec["f"].get<std::vector<double>>());
    if (rec.contains("forest")) d.forests.push_back(Forest::deserialize(rec["forest"].get<std::string>()));
  }
  return d;
}

}  // namespace riaft
