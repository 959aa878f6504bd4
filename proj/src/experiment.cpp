#include "mvecf/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "mvecf/errors.hpp"
#include "mvecf/evaluation.hpp"
#include "mvecf/mvecf_model.hpp"
#include "mvecf/mvopt.hpp"
#include "mvecf/parallel.hpp"
#include "mvecf/ranking.hpp"
#include "mvecf/rng.hpp"
#include "mvecf/synth.hpp"
#include "mvecf/version.hpp"

namespace mvecf {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamSplit = 0x73706c74ULL;  // "splt"

enum class Kind { object, array, string, boolean, number, other };

Kind kind_of(const json& v) {
  if (v.is_object()) return Kind::object;
  if (v.is_array()) return Kind::array;
  if (v.is_string()) return Kind::string;
  if (v.is_boolean()) return Kind::boolean;
  if (v.is_number()) return Kind::number;
  return Kind::other;
}

void merge_into(json& base, const json& user, const std::string& path) {
  for (const auto& [key, value] : user.items()) {
    if (!base.contains(key)) throw ConfigError("config: unknown key '" + path + key + "'");
    json& slot = base[key];
    if (slot.is_object() && value.is_object()) {
      merge_into(slot, value, path + key + ".");
      continue;
    }
    if (kind_of(slot) != kind_of(value))
      throw ConfigError("config: type mismatch at '" + path + key + "'");
    slot = value;
  }
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError("[stage:" + std::string(name) + "] " + e.what());
  } catch (const DataError& e) {
    throw DataError("[stage:" + std::string(name) + "] " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("[stage:" + std::string(name) + "] " + e.what());
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

SynthConfig synth_from_json(const json& syn, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_items = syn.at("n_items").get<int>();
  cfg.m_users = syn.at("m_users").get<int>();
  cfg.T_periods = syn.at("T_periods").get<int>();
  cfg.K_factors = syn.at("K_factors").get<int>();
  cfg.factor_vol = syn.at("factor_vol").get<double>();
  cfg.idio_vol = syn.at("idio_vol").get<double>();
  cfg.mean_level = syn.at("mean_level").get<double>();
  cfg.mean_spread = syn.at("mean_spread").get<double>();
  cfg.n_sectors = syn.at("n_sectors").get<int>();
  cfg.holdings_min = syn.at("holdings_min").get<int>();
  cfg.holdings_max = syn.at("holdings_max").get<int>();
  cfg.sector_bias = syn.at("sector_bias").get<double>();
  cfg.periods_per_year = syn.at("periods_per_year").get<int>();
  cfg.first_period = syn.at("first_period").get<std::string>();
  cfg.seed = seed;
  return cfg;
}

Hyperparams hyper_from_json(const json& h, std::uint64_t seed) {
  Hyperparams hy;
  hy.l = h.at("l").get<int>();
  hy.lambda_reg = h.at("lambda_reg").get<double>();
  hy.c_pos = h.at("c_pos").get<double>();
  hy.c_neg = h.at("c_neg").get<double>();
  hy.lambda_mv = h.at("lambda_mv").get<double>();
  hy.gamma = h.at("gamma").get<double>();
  hy.alpha = h.at("alpha").get<double>();
  hy.max_iters = h.at("max_iters").get<int>();
  hy.tol = h.at("tol").get<double>();
  hy.seed = seed;
  return hy;
}

RankingConfig ranking_from_json(const json& r, std::uint64_t seed) {
  RankingConfig cfg;
  cfg.l = r.at("l").get<int>();
  cfg.alpha = r.at("alpha").get<double>();
  cfg.lambda_reg = r.at("lambda_reg").get<double>();
  cfg.tau_dist = r.at("tau_dist").get<double>();
  cfg.beta = r.at("beta").get<double>();
  cfg.epochs = r.at("epochs").get<int>();
  cfg.seed = seed;
  return cfg;
}

ReturnsPanel take_periods(const ReturnsPanel& panel, Eigen::Index begin, Eigen::Index count) {
  ReturnsPanel out;
  out.periods_per_year = panel.periods_per_year;
  out.item_ids = panel.item_ids;
  out.returns = panel.returns.middleRows(begin, count);
  out.period_labels.assign(panel.period_labels.begin() + begin,
                           panel.period_labels.begin() + begin + count);
  return out;
}

struct FitOutput {
  FactorModel model;
  LossTrace trace;
  bool two_step = false;
  json relabel_info;  // null unless the sampled-BPR model ran
  std::unique_ptr<RelabeledInteractions> relabeled;
};

FitOutput fit_model(const SubDataset& ds, const json& config) {
  const std::string model_name = config.at("model").get<std::string>();
  const auto seed = config.at("seed").get<std::uint64_t>();
  const Hyperparams hyper = hyper_from_json(config.at("hyper"), seed);
  const RankingConfig rcfg = ranking_from_json(config.at("ranking"), seed);

  PairList val;
  for (int u = 0; u < ds.validation.m; ++u)
    for (int i : ds.validation.rows[u]) val.emplace_back(u, i);

  FitOutput out;
  if (model_name == "wmf") {
    auto targets = wmf_targets(ds.train, hyper);
    auto fit = fit_als(targets, hyper, nullptr, &val);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
  } else if (model_name == "mvecf_wmf") {
    auto fit = fit_mvecf_wmf(ds.train, ds.stats, hyper, &val);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
  } else if (model_name == "mvecf_reg") {
    auto fit = fit_mvecf_reg(ds.train, ds.stats, hyper, &val);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
  } else if (model_name == "bpr") {
    auto fit = fit_bpr(ds.train, rcfg);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
  } else if (model_name == "bpr_nov") {
    DistFn dist = [&ds](int i, int j) { return dissimilarity(ds.stats, i, j); };
    auto fit = fit_bpr(ds.train, rcfg, &dist);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
  } else if (model_name == "bpr_mvecf_sampled") {
    const double frac = config.at("ranking").at("conversion_fraction").get<double>();
    auto relabeled = mv_efficient_relabel(ds.train, ds.stats, hyper, frac);
    auto fit = fit_bpr(relabeled.positives, rcfg);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
    out.relabel_info = json{{"tau_s", relabeled.tau_s},
                            {"neg_to_pos", relabeled.neg_to_pos},
                            {"pos_to_neg", relabeled.pos_to_neg},
                            {"original_negatives", relabeled.original_negatives}};
    out.relabeled = std::make_unique<RelabeledInteractions>(std::move(relabeled));
  } else if (model_name == "two_step_wmf") {
    auto targets = wmf_targets(ds.train, hyper);
    auto fit = fit_als(targets, hyper, nullptr, &val);
    out.model = std::move(fit.model);
    out.trace = std::move(fit.trace);
    out.two_step = true;
  } else {
    throw ConfigError("unknown model '" + model_name + "'");
  }
  return out;
}

std::vector<std::vector<int>> union_rows(const InteractionMatrix& a, const InteractionMatrix& b) {
  std::vector<std::vector<int>> out(a.m);
  for (int u = 0; u < a.m; ++u) {
    std::set<int> s(a.rows[u].begin(), a.rows[u].end());
    s.insert(b.rows[u].begin(), b.rows[u].end());
    out[u].assign(s.begin(), s.end());
  }
  return out;
}

RecommendationList recommend(const FitOutput& fit, const SubDataset& ds,
                             const std::vector<std::vector<int>>& exclude, const json& config) {
  const int k = config.at("eval").at("k").get<int>();
  if (!fit.two_step) return topk_recommend(fit.model, exclude, k);

  const int k_filter_cfg = config.at("eval").at("k_filter").get<int>();
  const double gamma = config.at("hyper").at("gamma").get<double>();
  RecommendationList recs;
  recs.k = k;
  recs.per_user.resize(ds.full.m);
  parallel_for(0, ds.full.m, [&](int u) {
    const Eigen::VectorXd scores = fit.model.predict(u);
    const int non_held = ds.full.n - static_cast<int>(exclude[u].size());
    const int k_filter = std::min(k_filter_cfg, non_held);
    auto order = two_step_rerank(scores, exclude[u], ds.stats, k_filter, k, gamma);
    for (std::size_t r = 0; r < order.size(); ++r)
      recs.per_user[u].emplace_back(order[r], static_cast<double>(order.size() - r));
  });
  return recs;
}

json metrics_json(const SubDataset& ds, const RecommendationList& recs_test,
                  const RecommendationList& recs_mv, const json& config) {
  const int k = config.at("eval").at("k").get<int>();
  const bool annualize = config.at("eval").at("annualize").get<bool>();

  std::vector<std::vector<int>> test_relevant(ds.test.m);
  for (int u = 0; u < ds.test.m; ++u) test_relevant[u] = ds.test.rows[u];

  json metrics;
  metrics["k"] = k;
  metrics["map_at_k"] = map_at_k(recs_test, test_relevant, k);
  metrics["recall_at_k"] = recall_at_k(recs_test, test_relevant, k);

  PortfolioReport port = portfolio_metrics(ds.full.rows, recs_mv, ds.stats);
  metrics["delta_mu"] = port.delta_mu;
  metrics["delta_sigma"] = port.delta_sigma;
  metrics["delta_sr"] = port.delta_sr;
  metrics["p_sr_improved"] = port.p_sr_improved;
  metrics["zero_risk_excluded"] = port.zero_risk_excluded;

  if (ds.expost_panel.periods() >= 2) {
    PortfolioReport ex = expost_metrics(ds.full.rows, recs_mv, ds.expost_panel, annualize);
    metrics["expost"] = json{{"delta_sr", ex.delta_sr},
                             {"delta_mu", ex.delta_mu},
                             {"delta_sigma", ex.delta_sigma},
                             {"p_sr_improved", ex.p_sr_improved},
                             {"zero_variance_excluded", ex.zero_risk_excluded}};
  } else {
    metrics["expost"] = nullptr;
  }
  return metrics;
}

void write_per_user_csv(const std::string& path, const SubDataset& ds,
                        const RecommendationList& recs_mv, bool annualize) {
  PortfolioReport port = portfolio_metrics(ds.full.rows, recs_mv, ds.stats);
  const bool has_expost = ds.expost_panel.periods() >= 2;
  PortfolioReport ex;
  if (has_expost) ex = expost_metrics(ds.full.rows, recs_mv, ds.expost_panel, annualize);

  std::ostringstream out;
  out << "user_id,holdings,mu_init,sigma_init,sr_init,mu_rec,sigma_rec,sr_rec,zero_risk,"
         "expost_sr_init,expost_sr_rec,expost_zero_variance\n";
  for (std::size_t u = 0; u < port.rows.size(); ++u) {
    const auto& r = port.rows[u];
    out << ds.full.user_ids[u] << ',' << ds.full.rows[u].size() << ',' << fmt_double(r.mu_init)
        << ',' << fmt_double(r.sigma_init) << ',' << (r.zero_risk ? "" : fmt_double(r.sr_init))
        << ',' << fmt_double(r.mu_rec) << ',' << fmt_double(r.sigma_rec) << ','
        << (r.zero_risk ? "" : fmt_double(r.sr_rec)) << ',' << (r.zero_risk ? 1 : 0) << ',';
    if (has_expost) {
      const auto& e = ex.rows[u];
      out << (e.zero_risk ? "" : fmt_double(e.sr_init)) << ','
          << (e.zero_risk ? "" : fmt_double(e.sr_rec)) << ',' << (e.zero_risk ? 1 : 0) << '\n';
    } else {
      out << ",,\n";
    }
  }
  write_text_file(path, out.str());
}

void write_loss_trace_csv(const std::string& path, const LossTrace& trace) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss\n";
  for (const auto& rec : trace) {
    out << rec.step << ',' << fmt_double(rec.train_loss) << ',';
    if (std::isfinite(rec.val_loss)) out << fmt_double(rec.val_loss);
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

json default_config() {
  json cfg;
  cfg["seed"] = 42;
  cfg["threads"] = 1;
  cfg["out_dir"] = "run_out";
  cfg["model"] = "mvecf_wmf";
  cfg["data"] = {
      {"source", "synthetic"},
      {"synthetic",
       {{"n_items", 300},
        {"m_users", 200},
        {"T_periods", 120},
        {"K_factors", 8},
        {"factor_vol", 0.06},
        {"idio_vol", 0.02},
        {"mean_level", 0.007},
        {"mean_spread", 0.003},
        {"n_sectors", 8},
        {"holdings_min", 10},
        {"holdings_max", 30},
        {"sector_bias", 0.85},
        {"expost_periods", 60},
        {"periods_per_year", 12},
        {"first_period", "2006-01"}}},
      {"csv",
       {{"returns", ""},
        {"holdings_dir", ""},
        {"year", 2015},
        {"est_years", 5},
        {"post_years", 5},
        {"min_holdings", 2},
        {"periods_per_year", 12}}}};
  cfg["hyper"] = {{"l", 30},        {"lambda_reg", 1e-3}, {"c_pos", 10.0},
                  {"c_neg", 1.0},   {"lambda_mv", 10.0},  {"gamma", 3.0},
                  {"alpha", 1e-3},  {"max_iters", 50},    {"tol", 1e-6}};
  cfg["ranking"] = {{"l", 30},   {"alpha", 1e-3},  {"lambda_reg", 1e-5},
                    {"tau_dist", 0.9}, {"beta", 0.8},    {"epochs", 50},
                    {"conversion_fraction", 0.01}};
  cfg["split"] = {{"ratios", {8, 1, 1}}};
  cfg["eval"] = {{"k", 20}, {"k_filter", 50}, {"annualize", true}};
  cfg["sweep"] = {{"lambda_mv", {0.1, 1.0, 10.0}}, {"gamma", {3.0}}};
  return cfg;
}

json resolve_config(const json& user) {
  json cfg = default_config();
  if (!user.is_object()) throw ConfigError("config: top level must be a JSON object");
  merge_into(cfg, user, "");
  return cfg;
}

json load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json user;
  try {
    f >> user;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return resolve_config(user);
}

void apply_override(json& config, const std::string& dotted_key, const std::string& value) {
  json* slot = &config;
  std::string token;
  std::istringstream ss(dotted_key);
  std::vector<std::string> parts;
  while (std::getline(ss, token, '.')) parts.push_back(token);
  if (parts.empty()) throw ConfigError("config: empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!slot->contains(parts[i]) || !(*slot)[parts[i]].is_object())
      throw ConfigError("config: unknown key '" + dotted_key + "'");
    slot = &(*slot)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!slot->contains(leaf)) throw ConfigError("config: unknown key '" + dotted_key + "'");
  json& target = (*slot)[leaf];

  json parsed;
  bool ok = false;
  try {
    parsed = json::parse(value);
    ok = true;
  } catch (const json::exception&) {
  }
  if (target.is_array() && (!ok || !parsed.is_array())) {
    try {
      parsed = json::parse("[" + value + "]");
      ok = parsed.is_array();
    } catch (const json::exception&) {
      ok = false;
    }
  }
  if (!ok) parsed = value;  // plain string
  if (kind_of(target) != kind_of(parsed))
    throw ConfigError("config: override '" + dotted_key + "=" + value + "' has the wrong type");
  target = parsed;
}

std::string config_hash(const json& config) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

DataBundle build_data(const json& config) {
  return stage("data", [&]() -> DataBundle {
    const auto seed = config.at("seed").get<std::uint64_t>();
    const auto& data = config.at("data");
    const std::string source = data.at("source").get<std::string>();
    const bool annualize = config.at("eval").at("annualize").get<bool>();
    const auto ratios_vec = config.at("split").at("ratios").get<std::vector<int>>();
    if (ratios_vec.size() != 3) throw ConfigError("split.ratios must have 3 entries");
    const std::array<int, 3> ratios{ratios_vec[0], ratios_vec[1], ratios_vec[2]};

    DataBundle bundle;
    if (source == "synthetic") {
      SynthConfig syn = synth_from_json(data.at("synthetic"), seed);
      const int expost_periods = data.at("synthetic").at("expost_periods").get<int>();
      SynthConfig syn_all = syn;
      syn_all.T_periods = syn.T_periods + expost_periods;
      const ReturnsPanel all = gen_returns(syn_all);
      const ReturnsPanel est = take_periods(all, 0, syn.T_periods);

      bundle.ds.full = gen_holdings(syn);
      bundle.ds.stats = estimate_moments(est, annualize);
      bundle.ds.expost_panel = take_periods(all, syn.T_periods, expost_periods);
      bundle.ds.year_label = std::stoi(est.period_labels.back().substr(0, 4));
      Split split = split_dataset(bundle.ds.full, ratios, splitmix64(seed ^ kStreamSplit));
      bundle.ds.train = std::move(split.train);
      bundle.ds.test = std::move(split.test);
      bundle.ds.validation = std::move(split.validation);
    } else if (source == "csv") {
      const auto& c = data.at("csv");
      const int year = c.at("year").get<int>();
      const int ppy = c.at("periods_per_year").get<int>();
      ReturnsPanel panel = load_returns_csv_file(c.at("returns").get<std::string>(), ppy);
      const std::string holdings_path =
          c.at("holdings_dir").get<std::string>() + "/holdings_" + std::to_string(year) + ".csv";
      InteractionMatrix holdings =
          load_holdings_file(holdings_path, c.at("min_holdings").get<int>());
      BuildYearlyOptions opts;
      opts.est_years = c.at("est_years").get<int>();
      opts.post_years = c.at("post_years").get<int>();
      opts.annualize = annualize;
      opts.split_ratios = ratios;
      opts.split_seed = splitmix64(seed ^ kStreamSplit);
      std::map<int, InteractionMatrix> by_year;
      by_year.emplace(year, std::move(holdings));
      bundle.ds = build_yearly(by_year, panel, year, opts);
    } else {
      throw ConfigError("data.source must be 'synthetic' or 'csv'");
    }
    return bundle;
  });
}

json run_experiment(const json& config_in) {
  const json config = resolve_config(config_in);
  set_threads(config.at("threads").get<int>());
  const std::string out_dir = config.at("out_dir").get<std::string>();
  fs::create_directories(out_dir);
  const std::string incomplete_path = out_dir + "/INCOMPLETE";

  try {
    json manifest;
    manifest["config"] = config;
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.at("seed");
    manifest["versions"] = {{"mvecf", kVersion},
                            {"model_format", kModelFormatVersion},
                            {"report_schema", kReportSchemaVersion},
                            {"rng", kRngAlgorithm}};
    manifest["timestamp"] = iso_timestamp();
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");

    DataBundle bundle = build_data(config);
    const SubDataset& ds = bundle.ds;

    FitOutput fit = stage("fit", [&] { return fit_model(ds, config); });

    const auto exclude_test = union_rows(ds.train, ds.validation);
    std::vector<std::vector<int>> exclude_mv(ds.full.rows.begin(), ds.full.rows.end());
    RecommendationList recs_test, recs_mv;
    stage("recommend", [&] {
      recs_test = recommend(fit, ds, exclude_test, config);
      recs_mv = recommend(fit, ds, exclude_mv, config);
      return 0;
    });

    json report;
    stage("evaluate", [&] {
      report["schema_version"] = kReportSchemaVersion;
      report["counts"] = {{"users", ds.full.m},
                          {"items", ds.full.n},
                          {"entries", ds.full.entry_count()},
                          {"train", ds.train.entry_count()},
                          {"test", ds.test.entry_count()},
                          {"validation", ds.validation.entry_count()},
                          {"year", ds.year_label}};
      report["metrics"] = metrics_json(ds, recs_test, recs_mv, config);
      if (!fit.relabel_info.is_null()) report["relabel"] = fit.relabel_info;
      report["notes"] = {
          {"map_recall_protocol",
           "candidates exclude train+validation holdings; hits are test positives"},
          {"mv_protocol", "candidates exclude all known holdings; portfolios equal-weight"}};
      return 0;
    });

    stage("write", [&] {
      write_text_file(out_dir + "/report.json", report.dump(2) + "\n");
      write_per_user_csv(out_dir + "/per_user.csv", ds, recs_mv,
                         config.at("eval").at("annualize").get<bool>());
      write_loss_trace_csv(out_dir + "/loss_trace.csv", fit.trace);
      save_model(fit.model, out_dir + "/model.txt");
      if (fit.relabeled) {
        std::ostringstream csv;
        write_relabeled_csv(*fit.relabeled, csv);
        write_text_file(out_dir + "/relabeled.csv", csv.str());
      }
      return 0;
    });
    return report;
  } catch (const std::exception& e) {
    try {
      write_text_file(incomplete_path, std::string(e.what()) + "\n");
    } catch (...) {
    }
    throw;
  }
}

void run_fit(const json& config_in) {
  const json config = resolve_config(config_in);
  set_threads(config.at("threads").get<int>());
  const std::string out_dir = config.at("out_dir").get<std::string>();
  fs::create_directories(out_dir);
  try {
    json manifest = {{"config", config},
                     {"config_hash", config_hash(config)},
                     {"seed", config.at("seed")},
                     {"versions",
                      {{"mvecf", kVersion},
                       {"model_format", kModelFormatVersion},
                       {"report_schema", kReportSchemaVersion},
                       {"rng", kRngAlgorithm}}},
                     {"timestamp", iso_timestamp()}};
    write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
    DataBundle bundle = build_data(config);
    FitOutput fit = stage("fit", [&] { return fit_model(bundle.ds, config); });
    write_loss_trace_csv(out_dir + "/loss_trace.csv", fit.trace);
    save_model(fit.model, out_dir + "/model.txt");
    if (fit.relabeled) {
      std::ostringstream csv;
      write_relabeled_csv(*fit.relabeled, csv);
      write_text_file(out_dir + "/relabeled.csv", csv.str());
    }
  } catch (const std::exception& e) {
    try {
      write_text_file(out_dir + "/INCOMPLETE", std::string(e.what()) + "\n");
    } catch (...) {
    }
    throw;
  }
}

json run_sweep(const json& config_in) {
  const json config = resolve_config(config_in);
  const std::string out_dir = config.at("out_dir").get<std::string>();
  fs::create_directories(out_dir);
  const auto lambdas = config.at("sweep").at("lambda_mv").get<std::vector<double>>();
  const auto gammas = config.at("sweep").at("gamma").get<std::vector<double>>();
  if (lambdas.empty() || gammas.empty())
    throw ConfigError("sweep: lambda_mv and gamma lists must be nonempty");

  const int k = config.at("eval").at("k").get<int>();
  std::ostringstream table;
  table << "lambda_mv,gamma,delta_mu,delta_sigma,delta_sr,p_sr_improved,map_at_" << k
        << ",recall_at_" << k << "\n";
  json rows = json::array();
  for (double lmv : lambdas) {
    for (double g : gammas) {
      json sub = config;
      sub["hyper"]["lambda_mv"] = lmv;
      sub["hyper"]["gamma"] = g;
      sub["out_dir"] = out_dir + "/lmv" + fmt_short(lmv) + "_g" + fmt_short(g);
      const json report = run_experiment(sub);
      const json& m = report.at("metrics");
      table << fmt_short(lmv) << ',' << fmt_short(g) << ','
            << fmt_double(m.at("delta_mu").get<double>()) << ','
            << fmt_double(m.at("delta_sigma").get<double>()) << ','
            << fmt_double(m.at("delta_sr").get<double>()) << ','
            << fmt_double(m.at("p_sr_improved").get<double>()) << ','
            << fmt_double(m.at("map_at_k").get<double>()) << ','
            << fmt_double(m.at("recall_at_k").get<double>()) << '\n';
      json row = {{"lambda_mv", lmv}, {"gamma", g}, {"metrics", m}};
      rows.push_back(row);
    }
  }
  write_text_file(out_dir + "/summary_table.csv", table.str());
  json out = {{"rows", rows}};
  write_text_file(out_dir + "/sweep_summary.json", out.dump(2) + "\n");
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open for writing: " + path);
  f << content;
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace mvecf
