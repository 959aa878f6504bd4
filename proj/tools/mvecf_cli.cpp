// Batch experiment runner: gen / fit / recommend / eval / experiment / sweep.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mvecf/errors.hpp"
#include "mvecf/evaluation.hpp"
#include "mvecf/experiment.hpp"
#include "mvecf/mvecf_model.hpp"
#include "mvecf/mvopt.hpp"
#include "mvecf/parallel.hpp"
#include "mvecf/ranking.hpp"
#include "mvecf/synth.hpp"
#include "mvecf/version.hpp"

namespace {

using mvecf::json;

struct CommonOpts {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Registers one string option per leaf of the default config so every field
// is overridable by its dotted name (e.g. --hyper.lambda_mv 10).
void register_config_flags(CLI::App* app, CommonOpts& opts) {
  app->add_option("-c,--config", opts.config_path, "JSON config file (defaults used otherwise)");
  std::function<void(const json&, const std::string&)> walk = [&](const json& node,
                                                                  const std::string& prefix) {
    for (const auto& [key, value] : node.items()) {
      const std::string dotted = prefix.empty() ? key : prefix + "." + key;
      if (value.is_object()) {
        walk(value, dotted);
      } else {
        app->add_option_function<std::string>(
               "--" + dotted,
               [&opts, dotted](const std::string& v) { opts.overrides.emplace_back(dotted, v); },
               "override config field " + dotted)
            ->type_name(value.is_array() ? "LIST" : "VALUE");
      }
    }
  };
  walk(mvecf::default_config(), "");
}

json resolve(const CommonOpts& opts) {
  json cfg = opts.config_path.empty() ? mvecf::default_config()
                                      : mvecf::load_config_file(opts.config_path);
  for (const auto& [key, value] : opts.overrides) mvecf::apply_override(cfg, key, value);
  mvecf::set_threads(cfg.at("threads").get<int>());
  return cfg;
}

mvecf::SynthConfig synth_config(const json& cfg) {
  const auto& syn = cfg.at("data").at("synthetic");
  mvecf::SynthConfig s;
  s.n_items = syn.at("n_items").get<int>();
  s.m_users = syn.at("m_users").get<int>();
  s.T_periods = syn.at("T_periods").get<int>();
  s.K_factors = syn.at("K_factors").get<int>();
  s.factor_vol = syn.at("factor_vol").get<double>();
  s.idio_vol = syn.at("idio_vol").get<double>();
  s.mean_level = syn.at("mean_level").get<double>();
  s.mean_spread = syn.at("mean_spread").get<double>();
  s.n_sectors = syn.at("n_sectors").get<int>();
  s.holdings_min = syn.at("holdings_min").get<int>();
  s.holdings_max = syn.at("holdings_max").get<int>();
  s.sector_bias = syn.at("sector_bias").get<double>();
  s.periods_per_year = syn.at("periods_per_year").get<int>();
  s.first_period = syn.at("first_period").get<std::string>();
  s.seed = cfg.at("seed").get<std::uint64_t>();
  return s;
}

// gen: write returns.csv (estimation + ex-post span) and holdings_<year>.csv.
int cmd_gen(const json& cfg) {
  namespace fs = std::filesystem;
  const std::string out_dir = cfg.at("out_dir").get<std::string>();
  fs::create_directories(out_dir);
  mvecf::SynthConfig syn = synth_config(cfg);
  const int expost = cfg.at("data").at("synthetic").at("expost_periods").get<int>();
  mvecf::SynthConfig span = syn;
  span.T_periods = syn.T_periods + expost;
  const mvecf::ReturnsPanel panel = mvecf::gen_returns(span);
  const mvecf::InteractionMatrix holdings = mvecf::gen_holdings(syn);
  const int year = std::stoi(panel.period_labels[syn.T_periods - 1].substr(0, 4));

  std::ostringstream returns_csv;
  mvecf::write_returns_csv(panel, returns_csv);
  mvecf::write_text_file(out_dir + "/returns.csv", returns_csv.str());
  std::ostringstream holdings_csv;
  mvecf::write_holdings_csv(holdings, holdings_csv);
  mvecf::write_text_file(out_dir + "/holdings_" + std::to_string(year) + ".csv",
                         holdings_csv.str());
  std::cout << "wrote " << out_dir << "/returns.csv (" << panel.periods() << " periods, "
            << panel.items() << " items) and holdings_" << year << ".csv ("
            << holdings.entry_count() << " entries)\n";
  return 0;
}

int cmd_fit(const json& cfg) {
  mvecf::run_fit(cfg);
  std::cout << "model written to " << cfg.at("out_dir").get<std::string>() << "/model.txt\n";
  return 0;
}

int cmd_recommend(const json& cfg, const std::string& model_path, const std::string& protocol,
                  const std::string& out_path) {
  mvecf::DataBundle bundle = mvecf::build_data(cfg);
  const mvecf::SubDataset& ds = bundle.ds;
  mvecf::FactorModel model = mvecf::load_model(model_path);
  if (model.users() != ds.full.m || model.items() != ds.full.n)
    throw mvecf::DataError("recommend: model shape does not match the data universe");

  std::vector<std::vector<int>> exclude;
  if (protocol == "mv") {
    exclude = ds.full.rows;
  } else if (protocol == "test") {
    exclude.resize(ds.full.m);
    for (int u = 0; u < ds.full.m; ++u) {
      std::vector<int> merged = ds.train.rows[u];
      merged.insert(merged.end(), ds.validation.rows[u].begin(), ds.validation.rows[u].end());
      std::sort(merged.begin(), merged.end());
      exclude[u] = std::move(merged);
    }
  } else {
    throw mvecf::ConfigError("recommend: protocol must be 'mv' or 'test'");
  }
  const int k = cfg.at("eval").at("k").get<int>();
  mvecf::RecommendationList recs = mvecf::topk_recommend(model, exclude, k);

  std::ostringstream out;
  out << "user_id,rank,item_id,score\n";
  char buf[40];
  for (int u = 0; u < ds.full.m; ++u)
    for (std::size_t r = 0; r < recs.per_user[u].size(); ++r) {
      std::snprintf(buf, sizeof(buf), "%.17g", recs.per_user[u][r].second);
      out << ds.full.user_ids[u] << ',' << (r + 1) << ','
          << ds.full.item_ids[recs.per_user[u][r].first] << ',' << buf << '\n';
    }
  mvecf::write_text_file(out_path, out.str());
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_eval(const json& cfg, const std::string& recs_path, const std::string& protocol,
             const std::string& out_path) {
  mvecf::DataBundle bundle = mvecf::build_data(cfg);
  const mvecf::SubDataset& ds = bundle.ds;

  std::map<std::string, int> item_index;
  for (int i = 0; i < ds.full.n; ++i) item_index[ds.full.item_ids[i]] = i;
  std::map<std::string, int> user_index;
  for (int u = 0; u < ds.full.m; ++u) user_index[ds.full.user_ids[u]] = u;

  std::ifstream f(recs_path);
  if (!f) throw mvecf::DataError("eval: cannot open " + recs_path);
  std::string line;
  std::getline(f, line);
  if (line != "user_id,rank,item_id,score")
    throw mvecf::DataError("eval: unexpected recommendations header");
  mvecf::RecommendationList recs;
  recs.per_user.resize(ds.full.m);
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string user, rank, item, score;
    std::getline(ss, user, ',');
    std::getline(ss, rank, ',');
    std::getline(ss, item, ',');
    std::getline(ss, score, ',');
    auto uit = user_index.find(user);
    auto iit = item_index.find(item);
    if (uit == user_index.end() || iit == item_index.end())
      throw mvecf::DataError("eval: line " + std::to_string(lineno) + ": unknown user or item id");
    recs.per_user[uit->second].emplace_back(iit->second, std::stod(score));
  }
  recs.k = 0;
  for (auto& r : recs.per_user) recs.k = std::max<int>(recs.k, static_cast<int>(r.size()));

  const int k = cfg.at("eval").at("k").get<int>();
  const bool annualize = cfg.at("eval").at("annualize").get<bool>();
  json metrics;
  if (protocol == "test") {
    metrics["map_at_k"] = mvecf::map_at_k(recs, ds.test.rows, k);
    metrics["recall_at_k"] = mvecf::recall_at_k(recs, ds.test.rows, k);
    metrics["k"] = k;
  } else if (protocol == "mv") {
    mvecf::PortfolioReport port = mvecf::portfolio_metrics(ds.full.rows, recs, ds.stats);
    metrics["delta_mu"] = port.delta_mu;
    metrics["delta_sigma"] = port.delta_sigma;
    metrics["delta_sr"] = port.delta_sr;
    metrics["p_sr_improved"] = port.p_sr_improved;
    metrics["zero_risk_excluded"] = port.zero_risk_excluded;
    if (ds.expost_panel.periods() >= 2) {
      mvecf::PortfolioReport ex =
          mvecf::expost_metrics(ds.full.rows, recs, ds.expost_panel, annualize);
      metrics["expost"] = {{"delta_sr", ex.delta_sr},
                           {"p_sr_improved", ex.p_sr_improved},
                           {"zero_variance_excluded", ex.zero_risk_excluded}};
    } else {
      metrics["expost"] = nullptr;
    }
  } else {
    throw mvecf::ConfigError("eval: protocol must be 'mv' or 'test'");
  }
  json report = {{"schema_version", mvecf::kReportSchemaVersion}, {"metrics", metrics}};
  mvecf::write_text_file(out_path, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-variance efficient collaborative filtering toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mvecf::kVersion);

  CommonOpts gen_opts, fit_opts, rec_opts, eval_opts, exp_opts, sweep_opts;
  auto* gen = app.add_subcommand("gen", "generate synthetic market + holdings CSVs");
  register_config_flags(gen, gen_opts);
  auto* fit = app.add_subcommand("fit", "fit a model and dump it with its loss trace");
  register_config_flags(fit, fit_opts);

  auto* rec = app.add_subcommand("recommend", "produce a top-k recommendations CSV");
  register_config_flags(rec, rec_opts);
  std::string model_path, rec_protocol = "mv", rec_out = "recommendations.csv";
  rec->add_option("--model-file", model_path, "factor-model dump")->required();
  rec->add_option("--protocol", rec_protocol, "'mv' (exclude all holdings) or 'test'");
  rec->add_option("--out", rec_out, "output CSV path");

  auto* ev = app.add_subcommand("eval", "evaluate a recommendations CSV");
  register_config_flags(ev, eval_opts);
  std::string recs_path, eval_protocol = "mv", eval_out = "eval_report.json";
  ev->add_option("--recs", recs_path, "recommendations CSV")->required();
  ev->add_option("--protocol", eval_protocol, "'mv' or 'test'");
  ev->add_option("--out", eval_out, "output report path");

  auto* exp = app.add_subcommand("experiment", "run the full pipeline into out_dir");
  register_config_flags(exp, exp_opts);
  auto* sweep = app.add_subcommand("sweep", "grid over sweep.lambda_mv x sweep.gamma");
  register_config_flags(sweep, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(resolve(gen_opts));
    if (fit->parsed()) return cmd_fit(resolve(fit_opts));
    if (rec->parsed()) return cmd_recommend(resolve(rec_opts), model_path, rec_protocol, rec_out);
    if (ev->parsed()) return cmd_eval(resolve(eval_opts), recs_path, eval_protocol, eval_out);
    if (exp->parsed()) {
      json report = mvecf::run_experiment(resolve(exp_opts));
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      mvecf::run_sweep(resolve(sweep_opts));
      std::cout << "sweep complete\n";
      return 0;
    }
  } catch (const mvecf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mvecf::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const mvecf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
