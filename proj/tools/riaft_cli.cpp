// Command-line front end: simulation, model fitting, counterfactual
// inference, variable selection and the benchmark runner. Every command is a
// pure function of (inputs, config, seed); manifests record config, seeds and
// output hashes for reproducibility.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riaft/ampute.hpp"
#include "riaft/dataset.hpp"
#include "riaft/effects.hpp"
#include "riaft/experiment.hpp"
#include "riaft/impute.hpp"
#include "riaft/metrics.hpp"
#include "riaft/sampler.hpp"
#include "riaft/simulate.hpp"
#include "riaft/var_select.hpp"

namespace {

using nlohmann::json;
using namespace riaft;

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Manifest: config echo, output hashes, wall time. The timestamp and runtime
// are the only fields expected to differ between identical runs.
void write_manifest(const std::string& path, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  json m;
  m["command"] = command;
  m["config"] = config;
  json files = json::object();
  for (const auto& f : outputs) {
    const auto slash = f.find_last_of('/');
    files[slash == std::string::npos ? f : f.substr(slash + 1)] = hex64(fnv1a_file(f));
  }
  m["outputs"] = files;
  m["wall_seconds"] = wall_seconds;
  m["timestamp"] = static_cast<long>(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
  write_text(path, m.dump(2) + "\n");
}

json load_config_file(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw std::runtime_error(std::string("cannot open config: ") + argv[i + 1]);
      json j;
      in >> j;
      return j;
    }
  return json::object();
}

template <typename T>
T cfg_or(const json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j[key].get<T>() : fallback;
}

std::string out_path(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : dir + "/" + name;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t0).count();
  }
};

// ---------------------------------------------------------------------------

int cmd_simulate(const json& cfg, const std::string& mode, const std::string& setting, const std::string& hazard,
                 int K, int nk, double censoring, std::uint64_t seed, bool oracle, const std::string& out_dir) {
  Timer timer;
  DgpConfig dgp;
  dgp.mode = mode == "vs" || mode == "varselect" ? DgpMode::VarSelect : DgpMode::Heterogeneity;
  dgp.setting = setting == "b" ? HeterogeneitySetting::B
                               : (setting == "c" ? HeterogeneitySetting::C : HeterogeneitySetting::A);
  dgp.hazard = hazard == "nph" ? HazardType::NPH : HazardType::PH;
  dgp.n_clusters = K;
  dgp.cluster_size = nk;
  dgp.censoring_target = censoring;
  dgp.noise_only = cfg_or(cfg, "noise_only", false);
  dgp.seed = seed;

  const SimResult sim = simulate_dataset(dgp);
  const std::string data_path = out_path(out_dir, "data.csv");
  save_dataset(sim.data, data_path);
  std::vector<std::string> outputs{data_path};

  if (oracle) {
    const std::string truth_path = out_path(out_dir, "truth.csv");
    std::ofstream t(truth_path);
    const int arms = dgp.n_arms();
    t << "row,b,eta,t_uncensored";
    for (int a = 1; a <= std::max(arms, 1); ++a) t << ",q" << a;
    for (int a = 1; a <= arms; ++a) t << ",t" << a;
    for (int a = 1; a <= arms; ++a) t << ",gps" << a;
    if (arms > 0) t << ",iste_1v2,iste_1v3,iste_2v3";
    t << "\n";
    std::vector<std::vector<double>> iste;
    if (arms > 0)
      for (auto [a, b] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}})
        iste.push_back(true_iste_oracle(dgp, sim.data.X, sim.truth.b, sim.data.cluster, a, b));
    for (std::size_t i = 0; i < sim.data.n(); ++i) {
      t << (i + 1) << ',' << format_double(sim.truth.b[static_cast<std::size_t>(sim.data.cluster[i] - 1)]) << ','
        << format_double(sim.truth.eta[i]) << ',' << format_double(sim.truth.uncensored_t[i]);
      for (const auto& q : sim.truth.q) t << ',' << format_double(q[i]);
      for (int a = 0; a < arms; ++a) t << ',' << format_double(sim.truth.counterfactual_t[static_cast<std::size_t>(a)][i]);
      for (int a = 0; a < arms; ++a) t << ',' << format_double(sim.truth.assignment.gps[i][static_cast<std::size_t>(a)]);
      for (const auto& z : iste) t << ',' << format_double(z[i]);
      t << "\n";
    }
    outputs.push_back(truth_path);
  }

  json echo = cfg;
  echo["mode"] = mode;
  echo["setting"] = setting;
  echo["hazard"] = hazard;
  echo["K"] = K;
  echo["n_k"] = nk;
  echo["censoring"] = censoring;
  echo["seed"] = seed;
  echo["oracle"] = oracle;
  write_manifest(out_path(out_dir, "simulate_manifest.json"), "simulate", echo, outputs, timer.seconds());
  return 0;
}

int cmd_fit(const json& cfg, const std::string& data_path, const std::vector<std::string>& categorical, int draws,
            int burn_in, int trees, std::uint64_t seed, bool save_forests, int heartbeat,
            const std::string& out_file, const std::string& out_dir) {
  Timer timer;
  DatasetSchema schema;
  schema.categorical_cols = categorical;
  const SurvivalDataset ds = load_dataset(data_path, schema);
  ChainConfig chain;
  chain.draws = draws;
  chain.burn_in = burn_in;
  chain.m = trees;
  chain.seed = seed;
  chain.keep_forests = save_forests;
  chain.heartbeat_every = heartbeat;
  const PosteriorDraws post = run_chain(ds, chain);
  const std::string path = out_file.empty() ? out_path(out_dir, "draws.jsonl") : out_file;
  save_draws(post, path);

  json echo = cfg;
  echo["data"] = data_path;
  echo["draws"] = draws;
  echo["burn_in"] = burn_in;
  echo["trees"] = trees;
  echo["seed"] = seed;
  echo["save_forests"] = save_forests;
  write_manifest(out_path(out_dir, "fit_manifest.json"), "fit", echo, {path}, timer.seconds());
  return 0;
}

int cmd_predict(const json& cfg, const std::string& draws_path, const std::string& data_path,
                const std::vector<std::string>& categorical, int arm, double surv_t, double rmst_t, bool new_cluster,
                const std::string& out_file, const std::string& out_dir) {
  Timer timer;
  const PosteriorDraws post = load_draws(draws_path);
  DatasetSchema schema;
  schema.categorical_cols = categorical;
  const SurvivalDataset ds = load_dataset(data_path, schema);
  PredictorMatrix X = PredictorMatrix::from_dataset(ds, ds.has_treatment());
  if (arm > 0) {
    if (!ds.has_treatment()) throw std::runtime_error("predict: --arm given but data has no treatment column");
    X.fill_column(0, static_cast<double>(arm - 1));
  }
  const auto f = predict_posterior(post, X);

  const std::string path = out_file.empty() ? out_path(out_dir, "predictions.csv") : out_file;
  std::ofstream out(path);
  out << "row,f_mean,f_lower,f_upper";
  if (surv_t > 0.0) out << ",surv_mean,surv_lower,surv_upper";
  if (rmst_t > 0.0) out << ",rmst_mean,rmst_lower,rmst_upper";
  out << "\n";
  std::vector<double> col(post.n_kept());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t d = 0; d < post.n_kept(); ++d) col[d] = f[d][i];
    const auto s = summarize_draws(col);
    out << (i + 1) << ',' << format_double(s.mean) << ',' << format_double(s.lower) << ',' << format_double(s.upper);
    const int cl = new_cluster ? 0 : ds.cluster[i];
    if (surv_t > 0.0) {
      const auto sp = summarize_draws(survival_prob_draws(post, col, cl, surv_t, post.seed + i));
      out << ',' << format_double(sp.mean) << ',' << format_double(sp.lower) << ',' << format_double(sp.upper);
    }
    if (rmst_t > 0.0) {
      const auto rm = summarize_draws(rmst_draws(post, col, cl, rmst_t, post.seed + i));
      out << ',' << format_double(rm.mean) << ',' << format_double(rm.lower) << ',' << format_double(rm.upper);
    }
    out << "\n";
  }
  out.close();

  json echo = cfg;
  echo["draws"] = draws_path;
  echo["data"] = data_path;
  echo["arm"] = arm;
  write_manifest(out_path(out_dir, "predict_manifest.json"), "predict", echo, {path}, timer.seconds());
  return 0;
}

int cmd_iste(const json& cfg, const std::string& draws_path, const std::string& data_path,
             const std::vector<std::string>& categorical, int arm_a, int arm_b, const std::string& out_file,
             const std::string& out_dir) {
  Timer timer;
  const PosteriorDraws post = load_draws(draws_path);
  DatasetSchema schema;
  schema.categorical_cols = categorical;
  const SurvivalDataset ds = load_dataset(data_path, schema);
  const IsteEstimate iste = estimate_iste(post, ds, arm_a, arm_b);
  const AteEstimate ate = estimate_ate(iste);

  const std::string path = out_file.empty() ? out_path(out_dir, "iste.csv") : out_file;
  std::ofstream out(path);
  out << "row,mean,lower,upper\n";
  for (std::size_t i = 0; i < iste.n_rows(); ++i)
    out << (i + 1) << ',' << format_double(iste.mean[i]) << ',' << format_double(iste.lower[i]) << ','
        << format_double(iste.upper[i]) << "\n";
  out.close();

  const std::string ate_path = out_path(out_dir, "ate.json");
  json aj;
  aj["pair"] = {arm_a, arm_b};
  aj["mean"] = ate.summary.mean;
  aj["lower"] = ate.summary.lower;
  aj["upper"] = ate.summary.upper;
  write_text(ate_path, aj.dump(2) + "\n");

  json echo = cfg;
  echo["draws"] = draws_path;
  echo["data"] = data_path;
  echo["pair"] = {arm_a, arm_b};
  write_manifest(out_path(out_dir, "iste_manifest.json"), "iste", echo, {path, ate_path}, timer.seconds());
  return 0;
}

int cmd_subgroups(const json& cfg, const std::string& draws_path, const std::string& data_path,
                  const std::vector<std::string>& categorical, int arm_a, int arm_b, int rf_trees,
                  double improvement, int depth, int min_leaf, std::uint64_t seed, const std::string& out_file,
                  const std::string& out_dir) {
  Timer timer;
  const PosteriorDraws post = load_draws(draws_path);
  DatasetSchema schema;
  schema.categorical_cols = categorical;
  const SurvivalDataset ds = load_dataset(data_path, schema);
  const IsteEstimate iste = estimate_iste(post, ds, arm_a, arm_b);

  // covariates only (no treatment column) drive the subgroup search
  const PredictorMatrix X = PredictorMatrix::from_dataset(ds, /*include_treatment=*/false);
  FitTheFitConfig ftf;
  ftf.rf.n_trees = rf_trees;
  ftf.improvement_threshold = improvement;
  ftf.seed = seed;
  const FitTheFitResult fit = fit_the_fit(iste.mean, X, ftf);

  json out;
  out["pair"] = {arm_a, arm_b};
  out["selected"] = json::array();
  for (int v : fit.selected) out["selected"].push_back(X.column_schema(static_cast<std::size_t>(v)).name);
  out["r2_path"] = fit.r2_path;
  out["rules"] = json::array();
  if (!fit.selected.empty()) {
    ExtractRulesConfig ec;
    ec.max_depth = depth;
    ec.min_leaf = min_leaf;
    for (const auto& rule : extract_rules(fit.model, X, iste, ec)) {
      json r;
      r["conditions"] = json::array();
      for (const auto& c : rule.conditions) r["conditions"].push_back(c.describe(X.schema()));
      r["n"] = rule.members.size();
      r["effect"] = rule.effect;
      r["lower"] = rule.lower;
      r["upper"] = rule.upper;
      out["rules"].push_back(r);
    }
  }
  const std::string path = out_file.empty() ? out_path(out_dir, "subgroups.json") : out_file;
  write_text(path, out.dump(2) + "\n");

  json echo = cfg;
  echo["draws"] = draws_path;
  echo["data"] = data_path;
  echo["pair"] = {arm_a, arm_b};
  echo["seed"] = seed;
  write_manifest(out_path(out_dir, "subgroups_manifest.json"), "subgroups", echo, {path}, timer.seconds());
  return 0;
}

int cmd_select(const json& cfg, const std::string& data_path, const std::vector<std::string>& categorical, int P,
               double alpha, int draws, int burn_in, int trees, int B, double pi, int impute_cycles,
               std::uint64_t seed, int jobs, const std::string& out_file, const std::string& out_dir) {
  Timer timer;
  DatasetSchema schema;
  schema.categorical_cols = categorical;
  const SurvivalDataset ds = load_dataset(data_path, schema);

  NullConfig null_cfg;
  null_cfg.permutations = P;
  null_cfg.chain.draws = draws;
  null_cfg.chain.burn_in = burn_in;
  null_cfg.chain.m = trees;
  null_cfg.jobs = jobs;

  SelectionResult sel;
  if (B > 0) {
    BootstrapSelectConfig bs;
    bs.B = B;
    bs.pi = pi;
    bs.alpha = alpha;
    bs.null_cfg = null_cfg;
    bs.impute.cycles = impute_cycles;
    bs.jobs = jobs;
    sel = aggregate_bootstrap_select(ds, bs, seed);
  } else {
    if (ds.mask.any())
      throw std::runtime_error("select: data has missing values; use --bootstrap B with imputation");
    sel = permutation_select(ds, null_cfg, alpha, seed);
  }

  const std::string path = out_file.empty() ? out_path(out_dir, "selection.csv") : out_file;
  std::ofstream out(path);
  out << "covariate,vip,threshold,selected,boot_count\n";
  for (std::size_t j = 0; j < sel.names.size(); ++j)
    out << sel.names[j] << ',' << format_double(sel.vip[j]) << ',' << format_double(sel.threshold[j]) << ','
        << (sel.selected[j] ? 1 : 0) << ',' << (sel.boot_count.empty() ? 0 : sel.boot_count[j]) << "\n";
  out.close();

  json echo = cfg;
  echo["data"] = data_path;
  echo["permutations"] = P;
  echo["alpha"] = alpha;
  echo["draws"] = draws;
  echo["burn_in"] = burn_in;
  echo["bootstrap_B"] = B;
  echo["pi"] = pi;
  echo["seed"] = seed;
  write_manifest(out_path(out_dir, "select_manifest.json"), "select", echo, {path}, timer.seconds());
  return 0;
}

int cmd_ampute(const json& cfg, const std::string& data_path, std::uint64_t seed, const std::string& out_file,
               const std::string& out_dir) {
  Timer timer;
  const SurvivalDataset ds = load_dataset(data_path);
  const AmputationPlan plan = default_amputation_plan();
  for (int j = 2; j <= 7; ++j) {
    const std::string want = "x" + std::to_string(j + 1);
    if (ds.n_covariates() <= static_cast<std::size_t>(j) || ds.column_names[static_cast<std::size_t>(j)] != want)
      throw std::runtime_error("ampute: default plan expects covariates x1..x28 in order (missing " + want + ")");
  }
  const SurvivalDataset amputated = ampute(ds, plan, seed);
  const std::string path = out_file.empty() ? out_path(out_dir, "amputated.csv") : out_file;
  save_dataset(amputated, path);

  json echo = cfg;
  echo["data"] = data_path;
  echo["seed"] = seed;
  write_manifest(out_path(out_dir, "ampute_manifest.json"), "ampute", echo, {path}, timer.seconds());
  return 0;
}

int cmd_impute(const json& cfg, const std::string& data_path, int cycles, std::uint64_t seed,
               const std::string& out_file, const std::string& out_dir) {
  Timer timer;
  const SurvivalDataset ds = load_dataset(data_path);
  ImputeConfig ic;
  ic.cycles = cycles;
  ic.seed = seed;
  const SurvivalDataset completed = chained_impute(ds, ic);
  const std::string path = out_file.empty() ? out_path(out_dir, "imputed.csv") : out_file;
  save_dataset(completed, path);

  json echo = cfg;
  echo["data"] = data_path;
  echo["cycles"] = cycles;
  echo["seed"] = seed;
  write_manifest(out_path(out_dir, "impute_manifest.json"), "impute", echo, {path}, timer.seconds());
  return 0;
}

int cmd_benchmark(const json& cfg, const std::string& scenario_path, int replicates, std::uint64_t seed, int jobs,
                  const std::string& out_dir) {
  Timer timer;
  std::ifstream in(scenario_path);
  if (!in) throw std::runtime_error("benchmark: cannot open scenario " + scenario_path);
  std::stringstream buf;
  buf << in.rdbuf();
  ScenarioConfig scenario = scenario_from_json(buf.str());
  if (replicates > 0) scenario.replicates = replicates;
  scenario.seed = seed;
  if (jobs > 0) scenario.jobs = jobs;

  const ExperimentReport report = run_experiment(scenario);

  std::vector<std::string> outputs;
  if (scenario.dgp.mode == DgpMode::Heterogeneity) {
    const std::string path = out_path(out_dir, "pehe.csv");
    write_text(path, report.het_csv());
    outputs.push_back(path);
  } else {
    const std::string mpath = out_path(out_dir, "selection_metrics.csv");
    write_text(mpath, report.selection_csv());
    const std::string rpath = out_path(out_dir, "selection_rates.csv");
    write_text(rpath, report.rates_csv());
    outputs.push_back(mpath);
    outputs.push_back(rpath);
  }

  json echo = cfg;
  echo["scenario"] = json::parse(scenario_to_json(scenario));
  echo["completed_replicates"] = report.completed_replicates;
  echo["mean_censoring"] = report.mean_censoring;
  echo["surv_eval_time"] = report.surv_eval_time;
  write_manifest(out_path(out_dir, "benchmark_manifest.json"), "benchmark", echo, outputs, timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riAFT-BART: clustered survival treatment effects and variable selection"};
  app.require_subcommand(1);

  json cfg;
  try {
    cfg = load_config_file(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  // shared option state
  std::string out_dir = cfg_or<std::string>(cfg, "out_dir", ".");
  std::string data_path, draws_path, out_file, scenario_path;
  std::vector<std::string> categorical = cfg_or<std::vector<std::string>>(cfg, "categorical", {});
  std::uint64_t seed = cfg_or<std::uint64_t>(cfg, "seed", 0);
  int jobs = cfg_or<int>(cfg, "jobs", 1);
  int draws = cfg_or<int>(cfg, "draws", 4500);
  int burn_in = cfg_or<int>(cfg, "burn_in", 1000);
  int trees = cfg_or<int>(cfg, "trees", 200);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--jobs", jobs, "parallel tasks");
    sub->add_option("--config", config_path, "JSON config file");
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a benchmark dataset");
  std::string mode = cfg_or<std::string>(cfg, "mode", "het");
  std::string setting = cfg_or<std::string>(cfg, "setting", "a");
  std::string hazard = cfg_or<std::string>(cfg, "hazard", "ph");
  int K = cfg_or<int>(cfg, "K", 10), nk = cfg_or<int>(cfg, "n_k", 200);
  double censoring = cfg_or<double>(cfg, "censoring", 0.5);
  bool oracle = cfg_or<bool>(cfg, "oracle", false);
  sim->add_option("--mode", mode, "het|vs")->check(CLI::IsMember({"het", "heterogeneity", "vs", "varselect"}));
  sim->add_option("--setting", setting, "a|b|c")->check(CLI::IsMember({"a", "b", "c"}));
  sim->add_option("--hazard", hazard, "ph|nph")->check(CLI::IsMember({"ph", "nph"}));
  sim->add_option("--K", K, "clusters");
  sim->add_option("--nk", nk, "cluster size");
  sim->add_option("--censoring", censoring, "target censoring proportion");
  sim->add_flag("--oracle", oracle, "write the truth sidecar");
  add_common(sim);

  // fit
  auto* fit = app.add_subcommand("fit", "run the Gibbs chain on a dataset");
  bool save_forests = cfg_or<bool>(cfg, "save_forests", false);
  int heartbeat = cfg_or<int>(cfg, "heartbeat", 0);
  fit->add_option("--data", data_path, "input CSV")->required();
  fit->add_option("--categorical", categorical, "covariates to treat as categorical");
  fit->add_option("--draws", draws, "total iterations");
  fit->add_option("--burn-in", burn_in, "burn-in iterations");
  fit->add_option("--trees", trees, "ensemble size");
  fit->add_flag("--save-forests", save_forests, "persist per-draw forests (off-sample prediction)");
  fit->add_option("--heartbeat", heartbeat, "progress interval (iterations) on stderr");
  fit->add_option("--out", out_file, "draw file path");
  add_common(fit);

  // predict
  auto* pred = app.add_subcommand("predict", "posterior prediction for rows");
  int arm = cfg_or<int>(cfg, "arm", 0);
  double surv_t = cfg_or<double>(cfg, "surv_t", 0.0), rmst_t = cfg_or<double>(cfg, "rmst_t", 0.0);
  bool new_cluster = cfg_or<bool>(cfg, "new_cluster", false);
  pred->add_option("--draws-file", draws_path, "draw file from fit")->required();
  pred->add_option("--data", data_path, "rows to predict")->required();
  pred->add_option("--categorical", categorical, "categorical covariates");
  pred->add_option("--arm", arm, "override the treatment column with this arm");
  pred->add_option("--surv-t", surv_t, "survival probability at this time");
  pred->add_option("--rmst-t", rmst_t, "restricted mean survival time horizon");
  pred->add_flag("--new-cluster", new_cluster, "integrate the random intercept instead of using row clusters");
  pred->add_option("--out", out_file, "output CSV");
  add_common(pred);

  // iste
  auto* iste = app.add_subcommand("iste", "individual treatment effects for an arm pair");
  std::vector<int> pair = cfg_or<std::vector<int>>(cfg, "pair", {1, 2});
  iste->add_option("--draws-file", draws_path, "draw file from fit (needs --save-forests)")->required();
  iste->add_option("--data", data_path, "dataset")->required();
  iste->add_option("--categorical", categorical, "categorical covariates");
  iste->add_option("--pair", pair, "two arms, e.g. --pair 1 2")->expected(2);
  iste->add_option("--out", out_file, "output CSV");
  add_common(iste);

  // subgroups
  auto* sub = app.add_subcommand("subgroups", "effect-modifier discovery and rule extraction");
  int rf_trees = cfg_or<int>(cfg, "rf_trees", 200);
  double improvement = cfg_or<double>(cfg, "improvement", 0.01);
  int rule_depth = cfg_or<int>(cfg, "rule_depth", 3);
  int rule_min_leaf = cfg_or<int>(cfg, "rule_min_leaf", 20);
  sub->add_option("--draws-file", draws_path, "draw file from fit (needs --save-forests)")->required();
  sub->add_option("--data", data_path, "dataset")->required();
  sub->add_option("--categorical", categorical, "categorical covariates");
  sub->add_option("--pair", pair, "two arms")->expected(2);
  sub->add_option("--rf-trees", rf_trees, "random-forest size");
  sub->add_option("--improvement", improvement, "relative R2 gain to keep adding covariates");
  sub->add_option("--rule-depth", rule_depth, "summary tree depth");
  sub->add_option("--rule-min-leaf", rule_min_leaf, "summary tree minimum leaf size");
  sub->add_option("--out", out_file, "output JSON");
  add_common(sub);

  // select
  auto* sel = app.add_subcommand("select", "permutation-based variable selection");
  int P = cfg_or<int>(cfg, "permutations", 100);
  double alpha = cfg_or<double>(cfg, "alpha", 0.05);
  int B = cfg_or<int>(cfg, "bootstrap_B", 0);
  double pi = cfg_or<double>(cfg, "pi", 0.5);
  int impute_cycles = cfg_or<int>(cfg, "impute_cycles", 10);
  int sel_draws = cfg_or<int>(cfg, "draws", 1500);
  int sel_burn = cfg_or<int>(cfg, "burn_in", 500);
  sel->add_option("--data", data_path, "dataset")->required();
  sel->add_option("--categorical", categorical, "categorical covariates");
  sel->add_option("--permutations,-P", P, "null permutations");
  sel->add_option("--alpha", alpha, "local threshold level");
  sel->add_option("--draws", sel_draws, "chain iterations per fit");
  sel->add_option("--burn-in", sel_burn, "burn-in per fit");
  sel->add_option("--trees", trees, "ensemble size");
  sel->add_option("--bootstrap", B, "bootstrap-imputation replicates (incomplete data)");
  sel->add_option("--pi", pi, "bootstrap selection fraction threshold");
  sel->add_option("--impute-cycles", impute_cycles, "chained-equations cycles");
  sel->add_option("--out", out_file, "output CSV");
  add_common(sel);

  // ampute
  auto* amp = app.add_subcommand("ampute", "introduce MAR missingness (default plan)");
  amp->add_option("--data", data_path, "complete dataset (x1..x28 layout)")->required();
  amp->add_option("--out", out_file, "output CSV");
  add_common(amp);

  // impute
  auto* imp = app.add_subcommand("impute", "chained-equations single imputation");
  int cycles = cfg_or<int>(cfg, "cycles", 10);
  imp->add_option("--data", data_path, "dataset with missing values")->required();
  imp->add_option("--cycles", cycles, "imputation cycles");
  imp->add_option("--out", out_file, "output CSV");
  add_common(imp);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "run a simulation scenario end to end");
  int replicates = cfg_or<int>(cfg, "replicates", 0);
  bench->add_option("--scenario", scenario_path, "scenario JSON")->required();
  bench->add_option("--replicates", replicates, "override scenario replicates");
  add_common(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(cfg, mode, setting, hazard, K, nk, censoring, seed, oracle, out_dir);
    if (fit->parsed())
      return cmd_fit(cfg, data_path, categorical, draws, burn_in, trees, seed, save_forests, heartbeat, out_file,
                     out_dir);
    if (pred->parsed())
      return cmd_predict(cfg, draws_path, data_path, categorical, arm, surv_t, rmst_t, new_cluster, out_file,
                         out_dir);
    if (iste->parsed())
      return cmd_iste(cfg, draws_path, data_path, categorical, pair.at(0), pair.at(1), out_file, out_dir);
    if (sub->parsed())
      return cmd_subgroups(cfg, draws_path, data_path, categorical, pair.at(0), pair.at(1), rf_trees, improvement,
                           rule_depth, rule_min_leaf, seed, out_file, out_dir);
    if (sel->parsed())
      return cmd_select(cfg, data_path, categorical, P, alpha, sel_draws, sel_burn, trees, B, pi, impute_cycles,
                        seed, jobs, out_file, out_dir);
    if (amp->parsed()) return cmd_ampute(cfg, data_path, seed, out_file, out_dir);
    if (imp->parsed()) return cmd_impute(cfg, data_path, cycles, seed, out_file, out_dir);
    if (bench->parsed()) return cmd_benchmark(cfg, scenario_path, replicates, seed, jobs, out_dir);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what();
    if (!e.column.empty()) std::cerr << " [column " << e.column << "]";
    std::cerr << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
