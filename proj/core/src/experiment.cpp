#include "riaft/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riaft/effects.hpp"
#include "riaft/parallel.hpp"

namespace riaft {

namespace {

struct MeanSd {
  double mean = 0.0, sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0));
  }
  return r;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct HetReplicate {
  bool ok = false;
  double censoring = 0.0;
  double eval_time = 0.0;
  struct Pair {
    double pehe_log = 0.0, pehe_naive = 0.0, pehe_surv = 0.0, pehe_rmst = 0.0;
    double ate = 0.0, true_ate = 0.0;
    bool covered = false;
    std::vector<SubclassStat> subclass;
  };
  std::vector<Pair> pairs;
};

struct VsReplicate {
  bool ok = false;
  double censoring = 0.0;
  std::vector<int> boot_count;  // bootstrap mode: per covariate
  std::vector<bool> selected;   // plain mode
  std::vector<std::string> names;
};

}  // namespace

ExperimentReport run_experiment(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.scenario = cfg;

  const std::size_t R = static_cast<std::size_t>(cfg.replicates);

  if (cfg.dgp.mode == DgpMode::Heterogeneity) {
    std::vector<HetReplicate> reps(R);
    parallel_for(R, cfg.jobs, [&](std::size_t r) {
      HetReplicate& rep = reps[r];
      try {
        DgpConfig dgp = cfg.dgp;
        dgp.seed = Rng::derive(cfg.seed, 11 * r).next_u64();
        const SimResult sim = simulate_dataset(dgp);
        rep.censoring = validate(sim.data).censoring_proportion;

        ChainConfig chain = cfg.chain;
        chain.seed = Rng::derive(cfg.seed, 11 * r + 1).next_u64();
        chain.keep_forests = true;
        chain.keep_f = false;
        const PosteriorDraws draws = run_chain(sim.data, chain);

        const double t_eval = cfg.surv_prob_time > 0.0 ? cfg.surv_prob_time : median_of(sim.truth.uncensored_t);
        rep.eval_time = t_eval;
        const auto lambdas = dgp.lambdas();

        for (const auto& [aj, ak] : cfg.pairs) {
          HetReplicate::Pair pr;
          const IsteEstimate iste = estimate_iste(draws, sim.data, aj, ak);
          const auto truth = true_iste_oracle(dgp, sim.data.X, sim.truth.b, sim.data.cluster, aj, ak);
          pr.pehe_log = metric_pehe(iste.mean, truth);
          const AteEstimate ate = estimate_ate(iste);
          pr.ate = ate.summary.mean;
          double tm = 0.0;
          for (double v : truth) tm += v;
          pr.true_ate = tm / static_cast<double>(truth.size());
          pr.covered = ate.summary.lower <= pr.true_ate && pr.true_ate <= ate.summary.upper;
          const std::vector<double> naive(truth.size(), ate.summary.mean);
          pr.pehe_naive = metric_pehe(naive, truth);

          // survival-probability scale at the evaluation time
          {
            PredictorMatrix Xa = PredictorMatrix::from_dataset(sim.data, true);
            PredictorMatrix Xb = Xa;
            Xa.fill_column(0, static_cast<double>(aj - 1));
            Xb.fill_column(0, static_cast<double>(ak - 1));
            const auto fa = predict_posterior(draws, Xa);
            const auto fb = predict_posterior(draws, Xb);
            const std::size_t n = sim.data.n();
            std::vector<double> est(n), tru(n);
            std::vector<double> fa_row(draws.n_kept()), fb_row(draws.n_kept());
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t d = 0; d < draws.n_kept(); ++d) {
                fa_row[d] = fa[d][i];
                fb_row[d] = fb[d][i];
              }
              const int cl = sim.data.cluster[i];
              const auto sa = survival_prob_draws(draws, fa_row, cl, t_eval);
              const auto sb = survival_prob_draws(draws, fb_row, cl, t_eval);
              double diff = 0.0;
              for (std::size_t d = 0; d < sa.size(); ++d) diff += sa[d] - sb[d];
              est[i] = diff / static_cast<double>(sa.size());
              const double bk = sim.truth.b[static_cast<std::size_t>(sim.data.cluster[i] - 1)];
              const double eta = sim.truth.eta[i];
              tru[i] = true_survival_prob(lambdas[static_cast<std::size_t>(aj - 1)],
                                          q_function(dgp, sim.data.X, i, aj, bk), eta, t_eval) -
                       true_survival_prob(lambdas[static_cast<std::size_t>(ak - 1)],
                                          q_function(dgp, sim.data.X, i, ak, bk), eta, t_eval);
            }
            pr.pehe_surv = metric_pehe(est, tru);
            if (cfg.gps_table)
              pr.subclass = metric_bias_rmse_by_gps(est, tru, sim.truth.assignment.gps);

            if (cfg.rmst_time > 0.0) {
              std::vector<double> est_r(n), tru_r(n);
              for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t d = 0; d < draws.n_kept(); ++d) {
                  fa_row[d] = fa[d][i];
                  fb_row[d] = fb[d][i];
                }
                const int cl = sim.data.cluster[i];
                const auto ra = rmst_draws(draws, fa_row, cl, cfg.rmst_time);
                const auto rb = rmst_draws(draws, fb_row, cl, cfg.rmst_time);
                double diff = 0.0;
                for (std::size_t d = 0; d < ra.size(); ++d) diff += ra[d] - rb[d];
                est_r[i] = diff / static_cast<double>(ra.size());
                const double bk = sim.truth.b[static_cast<std::size_t>(sim.data.cluster[i] - 1)];
                tru_r[i] = true_rmst(lambdas[static_cast<std::size_t>(aj - 1)],
                                     q_function(dgp, sim.data.X, i, aj, bk), sim.truth.eta[i], cfg.rmst_time) -
                           true_rmst(lambdas[static_cast<std::size_t>(ak - 1)],
                                     q_function(dgp, sim.data.X, i, ak, bk), sim.truth.eta[i], cfg.rmst_time);
              }
              pr.pehe_rmst = metric_pehe(est_r, tru_r);
            }
          }
          rep.pairs.push_back(std::move(pr));
        }
        rep.ok = true;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "run_experiment: replicate %zu failed: %s\n", r, e.what());
      }
    });

    std::vector<double> cens;
    for (std::size_t p = 0; p < cfg.pairs.size(); ++p) {
      HetPairReport agg;
      agg.arm_a = cfg.pairs[p].first;
      agg.arm_b = cfg.pairs[p].second;
      std::vector<double> v_log, v_naive, v_surv, v_rmst, v_ate, v_true;
      double covered = 0.0, done = 0.0;
      std::vector<double> sub_bias(default_gps_subclasses().size(), 0.0);
      std::vector<double> sub_se(default_gps_subclasses().size(), 0.0);
      std::vector<double> sub_cnt(default_gps_subclasses().size(), 0.0);
      for (const auto& rep : reps) {
        if (!rep.ok) continue;
        const auto& pr = rep.pairs[p];
        v_log.push_back(pr.pehe_log);
        v_naive.push_back(pr.pehe_naive);
        v_surv.push_back(pr.pehe_surv);
        if (cfg.rmst_time > 0.0) v_rmst.push_back(pr.pehe_rmst);
        v_ate.push_back(pr.ate);
        v_true.push_back(pr.true_ate);
        covered += pr.covered ? 1.0 : 0.0;
        done += 1.0;
        for (const auto& st : pr.subclass)
          if (st.present) {
            sub_bias[static_cast<std::size_t>(st.subclass - 1)] += st.bias;
            sub_se[static_cast<std::size_t>(st.subclass - 1)] += st.squared_error;
            sub_cnt[static_cast<std::size_t>(st.subclass - 1)] += 1.0;
          }
      }
      auto ms = mean_sd(v_log);
      agg.pehe_log_mean = ms.mean;
      agg.pehe_log_sd = ms.sd;
      ms = mean_sd(v_naive);
      agg.pehe_naive_mean = ms.mean;
      agg.pehe_naive_sd = ms.sd;
      ms = mean_sd(v_surv);
      agg.pehe_surv_mean = ms.mean;
      agg.pehe_surv_sd = ms.sd;
      agg.has_surv = true;
      if (cfg.rmst_time > 0.0) {
        ms = mean_sd(v_rmst);
        agg.pehe_rmst_mean = ms.mean;
        agg.pehe_rmst_sd = ms.sd;
        agg.has_rmst = true;
      }
      agg.ate_mean = mean_sd(v_ate).mean;
      agg.true_ate_mean = mean_sd(v_true).mean;
      agg.ate_covered = done > 0 ? covered / done : 0.0;
      if (cfg.gps_table) {
        for (std::size_t s = 0; s < sub_cnt.size(); ++s) {
          SubclassStat st;
          st.subclass = static_cast<int>(s) + 1;
          st.present = sub_cnt[s] > 0;
          if (st.present) {
            st.bias = sub_bias[s] / sub_cnt[s];
            st.squared_error = sub_se[s] / sub_cnt[s];
            st.count = static_cast<std::size_t>(sub_cnt[s]);
          }
          agg.subclass.push_back(st);
        }
      }
      report.het.push_back(std::move(agg));
    }
    for (const auto& rep : reps)
      if (rep.ok) {
        cens.push_back(rep.censoring);
        report.surv_eval_time = rep.eval_time;  // representative
        report.completed_replicates++;
      }
    report.mean_censoring = mean_sd(cens).mean;
  } else {
    // variable-selection study
    std::vector<VsReplicate> reps(R);
    parallel_for(R, cfg.jobs, [&](std::size_t r) {
      VsReplicate& rep = reps[r];
      try {
        DgpConfig dgp = cfg.dgp;
        dgp.seed = Rng::derive(cfg.seed, 13 * r).next_u64();
        const SimResult sim = simulate_dataset(dgp);
        SurvivalDataset ds = sim.data;
        rep.censoring = validate(ds).censoring_proportion;

        if (cfg.amputate) {
          ds = ampute(ds, default_amputation_plan(), Rng::derive(cfg.seed, 13 * r + 1).next_u64());
          if (cfg.complete_cases) {
            std::vector<std::size_t> keep;
            for (std::size_t i = 0; i < ds.n(); ++i)
              if (!ds.mask.row_incomplete(i)) keep.push_back(i);
            ds = subset_rows(ds, keep);
          } else if (cfg.bootstrap_B == 0) {
            ImputeConfig imp = cfg.impute;
            imp.seed = Rng::derive(cfg.seed, 13 * r + 2).next_u64();
            ds = chained_impute(ds, imp);
          }
        }

        NullConfig null_cfg = cfg.null_cfg;
        null_cfg.permutations = cfg.permutations;
        null_cfg.jobs = 1;
        if (cfg.bootstrap_B > 0) {
          BootstrapSelectConfig bs;
          bs.B = cfg.bootstrap_B;
          bs.pi = 0.5;  // counts are threshold-free; pi applied during aggregation
          bs.alpha = cfg.alpha;
          bs.null_cfg = null_cfg;
          bs.impute = cfg.impute;
          bs.jobs = 1;
          const auto sel = aggregate_bootstrap_select(ds, bs, Rng::derive(cfg.seed, 13 * r + 3).next_u64());
          rep.boot_count = sel.boot_count;
          rep.names = sel.names;
        } else {
          const auto sel = permutation_select(ds, null_cfg, cfg.alpha, Rng::derive(cfg.seed, 13 * r + 4).next_u64());
          rep.selected = sel.selected;
          rep.names = sel.names;
        }
        rep.ok = true;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "run_experiment: replicate %zu failed: %s\n", r, e.what());
      }
    });

    // truth sets over covariates (noise_only marks everything noise)
    std::vector<int> useful, noise;
    const int L = static_cast<int>(cfg.dgp.mode == DgpMode::VarSelect ? 28 : 7);
    for (int j = 0; j < L; ++j) {
      if (!cfg.dgp.noise_only && cfg.dgp.mode == DgpMode::VarSelect && j < 8)
        useful.push_back(j);
      else
        noise.push_back(j);
    }

    std::vector<double> grid = cfg.pi_grid;
    if (cfg.bootstrap_B > 0 && grid.empty()) grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    if (cfg.bootstrap_B == 0) grid = {0.0};

    for (const auto& rep : reps)
      if (rep.ok) {
        report.completed_replicates++;
        if (report.covariate_names.empty()) report.covariate_names = rep.names;
      }

    report.selection_rate.assign(report.covariate_names.size(), 0.0);

    for (double pi : grid) {
      std::vector<double> vp, vr, vf, vt;
      for (const auto& rep : reps) {
        if (!rep.ok) continue;
        std::vector<int> selected;
        if (cfg.bootstrap_B > 0) {
          for (std::size_t j = 0; j < rep.boot_count.size(); ++j)
            if (count_selected(rep.boot_count[j], cfg.bootstrap_B, pi)) selected.push_back(static_cast<int>(j));
        } else {
          for (std::size_t j = 0; j < rep.selected.size(); ++j)
            if (rep.selected[j]) selected.push_back(static_cast<int>(j));
        }
        const auto m = metric_selection(selected, useful, noise);
        vp.push_back(m.precision_defined ? m.precision : 0.0);
        vr.push_back(m.recall);
        vf.push_back(m.f1);
        vt.push_back(m.type1);
        if (pi == grid.front())
          for (int s : selected) report.selection_rate[static_cast<std::size_t>(s)] += 1.0;
      }
      SelectionAggregate agg;
      agg.pi = pi;
      auto ms = mean_sd(vp);
      agg.precision_mean = ms.mean;
      agg.precision_sd = ms.sd;
      ms = mean_sd(vr);
      agg.recall_mean = ms.mean;
      agg.recall_sd = ms.sd;
      ms = mean_sd(vf);
      agg.f1_mean = ms.mean;
      agg.f1_sd = ms.sd;
      ms = mean_sd(vt);
      agg.type1_mean = ms.mean;
      agg.type1_sd = ms.sd;
      report.selection.push_back(agg);
    }
    if (report.completed_replicates > 0)
      for (double& v : report.selection_rate) v /= static_cast<double>(report.completed_replicates);
    std::vector<double> cens;
    for (const auto& rep : reps)
      if (rep.ok) cens.push_back(rep.censoring);
    report.mean_censoring = mean_sd(cens).mean;
  }

  report.wall_seconds =
      std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string ExperimentReport::het_csv() const {
  std::ostringstream os;
  os << "pair,scale,mean,sd\n";
  for (const auto& h : het) {
    const std::string pair = std::to_string(h.arm_a) + "v" + std::to_string(h.arm_b);
    os << pair << ",log_time," << h.pehe_log_mean << "," << h.pehe_log_sd << "\n";
    os << pair << ",log_time_constant_ate," << h.pehe_naive_mean << "," << h.pehe_naive_sd << "\n";
    if (h.has_surv) os << pair << ",survival_prob," << h.pehe_surv_mean << "," << h.pehe_surv_sd << "\n";
    if (h.has_rmst) os << pair << ",rmst," << h.pehe_rmst_mean << "," << h.pehe_rmst_sd << "\n";
  }
  return os.str();
}

std::string ExperimentReport::selection_csv() const {
  std::ostringstream os;
  os << "pi,precision,precision_sd,recall,recall_sd,f1,f1_sd,type1,type1_sd\n";
  for (const auto& s : selection)
    os << s.pi << "," << s.precision_mean << "," << s.precision_sd << "," << s.recall_mean << "," << s.recall_sd
       << "," << s.f1_mean << "," << s.f1_sd << "," << s.type1_mean << "," << s.type1_sd << "\n";
  return os.str();
}

std::string ExperimentReport::rates_csv() const {
  std::ostringstream os;
  os << "covariate,selection_rate\n";
  for (std::size_t j = 0; j < covariate_names.size(); ++j)
    os << covariate_names[j] << "," << selection_rate[j] << "\n";
  return os.str();
}

namespace {

DgpMode mode_from_string(const std::string& s) {
  if (s == "heterogeneity" || s == "het") return DgpMode::Heterogeneity;
  if (s == "varselect" || s == "vs") return DgpMode::VarSelect;
  throw std::invalid_argument("unknown dgp mode: " + s);
}

HeterogeneitySetting setting_from_string(const std::string& s) {
  if (s == "a") return HeterogeneitySetting::A;
  if (s == "b") return HeterogeneitySetting::B;
  if (s == "c") return HeterogeneitySetting::C;
  throw std::invalid_argument("unknown heterogeneity setting: " + s);
}

HazardType hazard_from_string(const std::string& s) {
  if (s == "ph" || s == "PH") return HazardType::PH;
  if (s == "nph" || s == "nPH") return HazardType::NPH;
  throw std::invalid_argument("unknown hazard type: " + s);
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  ScenarioConfig cfg;
  const auto& d = j.at("dgp");
  cfg.dgp.mode = mode_from_string(d.value("mode", "heterogeneity"));
  cfg.dgp.setting = setting_from_string(d.value("setting", "a"));
  cfg.dgp.hazard = hazard_from_string(d.value("hazard", "ph"));
  cfg.dgp.n_clusters = d.value("K", 10);
  cfg.dgp.cluster_size = d.value("n_k", 200);
  cfg.dgp.censoring_target = d.value("censoring", 0.5);
  cfg.dgp.treatment_intercept_sd = d.value("tau_sd", 1.0);
  cfg.dgp.outcome_intercept_sd = d.value("b_sd", 4.0);
  cfg.dgp.noise_only = d.value("noise_only", false);
  if (d.contains("lambda")) cfg.dgp.lambda = d["lambda"].get<std::vector<double>>();

  cfg.replicates = j.value("replicates", 10);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.jobs = j.value("jobs", 1);
  cfg.chain.draws = j.value("draws", 1500);
  cfg.chain.burn_in = j.value("burn_in", 500);
  cfg.chain.m = j.value("trees", 200);

  if (j.contains("pairs")) {
    cfg.pairs.clear();
    for (const auto& p : j["pairs"]) cfg.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  }
  cfg.surv_prob_time = j.value("surv_prob_time", 21.0);
  cfg.rmst_time = j.value("rmst_time", 0.0);
  cfg.gps_table = j.value("gps_table", false);

  cfg.permutations = j.value("permutations", 20);
  cfg.alpha = j.value("alpha", 0.05);
  cfg.null_cfg.chain.draws = j.value("null_draws", 1500);
  cfg.null_cfg.chain.burn_in = j.value("null_burn_in", 500);
  cfg.null_cfg.chain.m = cfg.chain.m;
  cfg.amputate = j.value("amputate", false);
  cfg.complete_cases = j.value("complete_cases", false);
  cfg.bootstrap_B = j.value("bootstrap_B", 0);
  if (j.contains("pi_grid")) cfg.pi_grid = j["pi_grid"].get<std::vector<double>>();
  cfg.impute.cycles = j.value("impute_cycles", 10);
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["dgp"] = {{"mode", cfg.dgp.mode == DgpMode::Heterogeneity ? "heterogeneity" : "varselect"},
              {"setting", cfg.dgp.setting == HeterogeneitySetting::A   ? "a"
                          : cfg.dgp.setting == HeterogeneitySetting::B ? "b"
                                                                       : "c"},
              {"hazard", cfg.dgp.hazard == HazardType::PH ? "ph" : "nph"},
              {"K", cfg.dgp.n_clusters},
              {"n_k", cfg.dgp.cluster_size},
              {"censoring", cfg.dgp.censoring_target},
              {"tau_sd", cfg.dgp.treatment_intercept_sd},
              {"b_sd", cfg.dgp.outcome_intercept_sd},
              {"noise_only", cfg.dgp.noise_only}};
  if (!cfg.dgp.lambda.empty()) j["dgp"]["lambda"] = cfg.dgp.lambda;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["draws"] = cfg.chain.draws;
  j["burn_in"] = cfg.chain.burn_in;
  j["trees"] = cfg.chain.m;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : cfg.pairs) pairs.push_back({a, b});
  j["pairs"] = pairs;
  j["surv_prob_time"] = cfg.surv_prob_time;
  j["rmst_time"] = cfg.rmst_time;
  j["gps_table"] = cfg.gps_table;
  j["permutations"] = cfg.permutations;
  j["alpha"] = cfg.alpha;
  j["null_draws"] = cfg.null_cfg.chain.draws;
  j["null_burn_in"] = cfg.null_cfg.chain.burn_in;
  j["amputate"] = cfg.amputate;
  j["complete_cases"] = cfg.complete_cases;
  j["bootstrap_B"] = cfg.bootstrap_B;
  if (!cfg.pi_grid.empty()) j["pi_grid"] = cfg.pi_grid;
  j["impute_cycles"] = cfg.impute.cycles;
  return j.dump(2);
}

}  // namespace riaft
