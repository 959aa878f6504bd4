#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "mvecf/errors.hpp"
#include "mvecf/evaluation.hpp"
#include "mvecf/experiment.hpp"
#include "mvecf/mvecf_model.hpp"
#include "mvecf/mvopt.hpp"
#include "mvecf/parallel.hpp"
#include "mvecf/ranking.hpp"
#include "mvecf/rng.hpp"
#include "mvecf/synth.hpp"
#include "mvecf/version.hpp"

namespace py = pybind11;
using namespace mvecf;

namespace {

json json_from_str(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-variance efficient collaborative filtering core";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<ReturnsPanel>(m, "ReturnsPanel")
      .def(py::init<>())
      .def_readwrite("returns", &ReturnsPanel::returns)
      .def_readwrite("period_labels", &ReturnsPanel::period_labels)
      .def_readwrite("item_ids", &ReturnsPanel::item_ids)
      .def_readwrite("periods_per_year", &ReturnsPanel::periods_per_year)
      .def("periods", &ReturnsPanel::periods)
      .def("items", &ReturnsPanel::items);

  py::class_<MarketStats>(m, "MarketStats")
      .def_readonly("mu", &MarketStats::mu)
      .def_readonly("sigma", &MarketStats::sigma)
      .def_readonly("item_ids", &MarketStats::item_ids)
      .def("n_items", &MarketStats::n_items);

  py::class_<InteractionMatrix>(m, "InteractionMatrix")
      .def(py::init<>())
      .def_readwrite("m", &InteractionMatrix::m)
      .def_readwrite("n", &InteractionMatrix::n)
      .def_readwrite("rows", &InteractionMatrix::rows)
      .def_readwrite("user_ids", &InteractionMatrix::user_ids)
      .def_readwrite("item_ids", &InteractionMatrix::item_ids)
      .def("holds", &InteractionMatrix::holds)
      .def("entry_count", &InteractionMatrix::entry_count);

  py::class_<Split>(m, "Split")
      .def_readonly("train", &Split::train)
      .def_readonly("test", &Split::test)
      .def_readonly("validation", &Split::validation);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_items", &SynthConfig::n_items)
      .def_readwrite("m_users", &SynthConfig::m_users)
      .def_readwrite("T_periods", &SynthConfig::T_periods)
      .def_readwrite("K_factors", &SynthConfig::K_factors)
      .def_readwrite("factor_vol", &SynthConfig::factor_vol)
      .def_readwrite("idio_vol", &SynthConfig::idio_vol)
      .def_readwrite("mean_level", &SynthConfig::mean_level)
      .def_readwrite("mean_spread", &SynthConfig::mean_spread)
      .def_readwrite("n_sectors", &SynthConfig::n_sectors)
      .def_readwrite("holdings_min", &SynthConfig::holdings_min)
      .def_readwrite("holdings_max", &SynthConfig::holdings_max)
      .def_readwrite("sector_bias", &SynthConfig::sector_bias)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("periods_per_year", &SynthConfig::periods_per_year)
      .def_readwrite("first_period", &SynthConfig::first_period);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("l", &Hyperparams::l)
      .def_readwrite("lambda_reg", &Hyperparams::lambda_reg)
      .def_readwrite("c_pos", &Hyperparams::c_pos)
      .def_readwrite("c_neg", &Hyperparams::c_neg)
      .def_readwrite("lambda_mv", &Hyperparams::lambda_mv)
      .def_readwrite("gamma", &Hyperparams::gamma)
      .def_readwrite("alpha", &Hyperparams::alpha)
      .def_readwrite("max_iters", &Hyperparams::max_iters)
      .def_readwrite("tol", &Hyperparams::tol)
      .def_readwrite("seed", &Hyperparams::seed);

  py::class_<FactorModel>(m, "FactorModel")
      .def(py::init<>())
      .def_readwrite("P", &FactorModel::P)
      .def_readwrite("Q", &FactorModel::Q)
      .def("users", &FactorModel::users)
      .def("items", &FactorModel::items)
      .def("dim", &FactorModel::dim)
      .def("predict", &FactorModel::predict, py::arg("u"));

  py::class_<LossRecord>(m, "LossRecord")
      .def_readonly("step", &LossRecord::step)
      .def_readonly("train_loss", &LossRecord::train_loss)
      .def_readonly("val_loss", &LossRecord::val_loss);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("trace", &FitResult::trace);

  py::class_<ModifiedRatingsRow>(m, "ModifiedRatingsRow")
      .def_readonly("y_mv", &ModifiedRatingsRow::y_mv)
      .def_readonly("c_mv", &ModifiedRatingsRow::c_mv)
      .def_readonly("y_tilde", &ModifiedRatingsRow::y_tilde)
      .def_readonly("c_tilde", &ModifiedRatingsRow::c_tilde);

  py::class_<RankingConfig>(m, "RankingConfig")
      .def(py::init<>())
      .def_readwrite("l", &RankingConfig::l)
      .def_readwrite("alpha", &RankingConfig::alpha)
      .def_readwrite("lambda_reg", &RankingConfig::lambda_reg)
      .def_readwrite("tau_dist", &RankingConfig::tau_dist)
      .def_readwrite("beta", &RankingConfig::beta)
      .def_readwrite("epochs", &RankingConfig::epochs)
      .def_readwrite("seed", &RankingConfig::seed)
      .def_readwrite("sample_retries", &RankingConfig::sample_retries);

  py::class_<RelabeledInteractions>(m, "RelabeledInteractions")
      .def_readonly("positives", &RelabeledInteractions::positives)
      .def_readonly("tau_s", &RelabeledInteractions::tau_s)
      .def_readonly("neg_to_pos", &RelabeledInteractions::neg_to_pos)
      .def_readonly("pos_to_neg", &RelabeledInteractions::pos_to_neg)
      .def_readonly("original_negatives", &RelabeledInteractions::original_negatives);

  py::class_<RecommendationList>(m, "RecommendationList")
      .def_readonly("per_user", &RecommendationList::per_user)
      .def_readonly("k", &RecommendationList::k);

  py::class_<UserPortfolioRow>(m, "UserPortfolioRow")
      .def_readonly("user", &UserPortfolioRow::user)
      .def_readonly("mu_init", &UserPortfolioRow::mu_init)
      .def_readonly("sigma_init", &UserPortfolioRow::sigma_init)
      .def_readonly("sr_init", &UserPortfolioRow::sr_init)
      .def_readonly("mu_rec", &UserPortfolioRow::mu_rec)
      .def_readonly("sigma_rec", &UserPortfolioRow::sigma_rec)
      .def_readonly("sr_rec", &UserPortfolioRow::sr_rec)
      .def_readonly("zero_risk", &UserPortfolioRow::zero_risk);

  py::class_<PortfolioReport>(m, "PortfolioReport")
      .def_readonly("delta_mu", &PortfolioReport::delta_mu)
      .def_readonly("delta_sigma", &PortfolioReport::delta_sigma)
      .def_readonly("delta_sr", &PortfolioReport::delta_sr)
      .def_readonly("p_sr_improved", &PortfolioReport::p_sr_improved)
      .def_readonly("zero_risk_excluded", &PortfolioReport::zero_risk_excluded)
      .def_readonly("rows", &PortfolioReport::rows);

  // market_stats
  m.def("estimate_moments", &estimate_moments, py::arg("panel"), py::arg("annualize") = false,
        py::arg("diagonal_loading") = std::nullopt);
  m.def("sharpe_ratio", &sharpe_ratio, py::arg("weights"), py::arg("stats"));
  m.def("correlation", &correlation, py::arg("stats"), py::arg("i"), py::arg("j"));
  m.def("dissimilarity", &dissimilarity, py::arg("stats"), py::arg("i"), py::arg("j"));
  m.def("make_market_stats", &make_market_stats, py::arg("mu"), py::arg("sigma"),
        py::arg("item_ids") = std::vector<std::string>{}, py::arg("diagonal_loading") = 0.0);
  m.def("load_returns_csv", &load_returns_csv_file, py::arg("path"),
        py::arg("periods_per_year") = 12);

  // holdings_data
  m.def("load_holdings", &load_holdings_file, py::arg("path"), py::arg("min_holdings") = 1);
  m.def(
      "split_dataset",
      [](const InteractionMatrix& full, std::array<int, 3> ratios, std::uint64_t seed) {
        return split_dataset(full, ratios, seed);
      },
      py::arg("full"), py::arg("ratios") = std::array<int, 3>{8, 1, 1}, py::arg("seed") = 0);

  // synth
  m.def("gen_returns", &gen_returns, py::arg("cfg"));
  m.def("gen_holdings", &gen_holdings, py::arg("cfg"));

  // wmf
  m.def(
      "fit_wmf",
      [](const InteractionMatrix& train, const Hyperparams& hyper,
         const std::optional<PairList>& val) {
        auto targets = wmf_targets(train, hyper);
        return fit_als(targets, hyper, nullptr, val ? &*val : nullptr);
      },
      py::arg("train"), py::arg("hyper"), py::arg("val") = std::nullopt);
  m.def(
      "fit_als_dense",
      [](const Eigen::MatrixXd& target, const Eigen::MatrixXd& conf, const Hyperparams& hyper) {
        DenseTargets targets(target, conf);
        return fit_als(targets, hyper);
      },
      py::arg("target"), py::arg("confidence"), py::arg("hyper"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  // mvecf
  m.def("mv_ratings", &mv_ratings, py::arg("train"), py::arg("stats"), py::arg("hyper"),
        py::arg("u"));
  m.def(
      "fit_mvecf_wmf",
      [](const InteractionMatrix& train, const MarketStats& stats, const Hyperparams& hyper,
         const std::optional<PairList>& val) {
        return fit_mvecf_wmf(train, stats, hyper, val ? &*val : nullptr);
      },
      py::arg("train"), py::arg("stats"), py::arg("hyper"), py::arg("val") = std::nullopt);
  m.def(
      "fit_mvecf_reg",
      [](const InteractionMatrix& train, const MarketStats& stats, const Hyperparams& hyper,
         const std::optional<PairList>& val) {
        return fit_mvecf_reg(train, stats, hyper, val ? &*val : nullptr);
      },
      py::arg("train"), py::arg("stats"), py::arg("hyper"), py::arg("val") = std::nullopt);
  m.def("loss_mv_reg", &loss_mv_reg, py::arg("model"), py::arg("train"), py::arg("stats"),
        py::arg("hyper"));
  m.def("loss_mv_wmf_form", &loss_mv_wmf_form, py::arg("model"), py::arg("train"),
        py::arg("stats"), py::arg("hyper"));

  // ranking
  m.def(
      "fit_bpr",
      [](const InteractionMatrix& positives, const RankingConfig& cfg,
         const std::optional<MarketStats>& stats) {
        if (!stats) return fit_bpr(positives, cfg);
        DistFn dist = [&stats](int i, int j) { return dissimilarity(*stats, i, j); };
        return fit_bpr(positives, cfg, &dist);
      },
      py::arg("positives"), py::arg("cfg"), py::arg("stats") = std::nullopt);
  m.def("mv_efficient_relabel", &mv_efficient_relabel, py::arg("train"), py::arg("stats"),
        py::arg("hyper"), py::arg("conversion_fraction") = 0.01);

  // mvopt
  m.def(
      "solve_mv",
      [](const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, double gamma, double tol,
         int max_iters) {
        MVProblem p;
        p.mu_sub = mu;
        p.sigma_sub = sigma;
        p.gamma = gamma;
        p.candidate_items.resize(mu.size());
        for (int i = 0; i < mu.size(); ++i) p.candidate_items[i] = i;
        return solve_mv(p, tol, max_iters).weights;
      },
      py::arg("mu"), py::arg("sigma"), py::arg("gamma") = 3.0, py::arg("tol") = 1e-8,
      py::arg("max_iters") = 100000);
  m.def("two_step_rerank", &two_step_rerank, py::arg("base_scores"), py::arg("holdings"),
        py::arg("stats"), py::arg("k_filter"), py::arg("k_out"), py::arg("gamma"),
        py::arg("tol") = 1e-8, py::arg("max_iters") = 100000);

  // evaluation
  m.def("topk_recommend", &topk_recommend, py::arg("model"), py::arg("exclude"), py::arg("k"));
  m.def("map_at_k", &map_at_k, py::arg("recs"), py::arg("relevant"), py::arg("k"));
  m.def("recall_at_k", &recall_at_k, py::arg("recs"), py::arg("relevant"), py::arg("k"));
  m.def("portfolio_metrics", &portfolio_metrics, py::arg("holdings"), py::arg("recs"),
        py::arg("stats"));
  m.def("expost_metrics", &expost_metrics, py::arg("holdings"), py::arg("recs"),
        py::arg("expost"), py::arg("annualize") = false);

  // experiment runner (config and report travel as JSON strings)
  m.def("default_config", []() { return default_config().dump(); });
  m.def("run_experiment",
        [](const std::string& config) { return run_experiment(json_from_str(config)).dump(); },
        py::arg("config_json"));
  m.def("run_sweep",
        [](const std::string& config) { return run_sweep(json_from_str(config)).dump(); },
        py::arg("config_json"));
  m.def("set_threads", &set_threads, py::arg("n"));
}
