// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: fit a prior, plan labels, predict, evaluate,
// inspect weak submodularity, serve labeling sessions.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sparselabel/error.hpp"
#include "sparselabel/evaluation.hpp"
#include "sparselabel/io.hpp"
#include "sparselabel/label_planner.hpp"
#include "sparselabel/sbl_em.hpp"
#include "sparselabel/session_http.hpp"

namespace fs = std::filesystem;
namespace sl = sparselabel;
namespace io = sparselabel::io;

namespace {

constexpr const char* kOutputDirEnv = "SPARSELABEL_OUTPUT_DIR";

// Relative output paths resolve against $SPARSELABEL_OUTPUT_DIR when set.
fs::path output_path(const std::string& given) {
  fs::path p(given);
  if (p.is_absolute()) return p;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) {
    return fs::path(dir) / p;
  }
  return p;
}

void write_artifact(const std::string& out, const io::Json& doc) {
  const fs::path path = output_path(out);
  io::write_file(path, io::dump_json(doc));
  std::cout << path.string() << "\n";
}

struct DataOptions {
  std::string path;
  std::optional<double> frame_rate;

  sl::Dataset load() const { return io::load_dataset(path, std::nullopt, frame_rate); }
};

struct GridOptions {
  std::size_t m_max = 100;
  double spacing = 0.075;
};

struct EmOptions {
  double sigma2_init = 0.2;
  double alpha_init = 1.0;
  double eps_min = 1e-4;
  std::size_t max_iter = 5000;
  std::optional<std::size_t> k_order;
  std::string update = "row-sum";

  sl::EmConfig config() const {
    sl::EmConfig em;
    em.sigma2_init = sigma2_init;
    em.alpha_init = alpha_init;
    em.eps_min = eps_min;
    em.max_iter = max_iter;
    em.k_order = k_order;
    em.update_variant = sl::parse_alpha_update(update);
    em.validate();
    return em;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.path, "Dataset file (.csv or .json)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--frame-rate", d.frame_rate,
                  "Frame rate in Hz (required for a 'frame' column)")
      ->check(CLI::PositiveNumber);
}

void add_grid_options(CLI::App* cmd, GridOptions& g) {
  cmd->add_option("--m-max", g.m_max, "Largest frequency index")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
  cmd->add_option("--spacing", g.spacing, "Frequency grid spacing in Hz")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_em_options(CLI::App* cmd, EmOptions& e) {
  cmd->add_option("--sigma2-init", e.sigma2_init, "Initial noise variance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha-init", e.alpha_init, "Initial prior variance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eps-min", e.eps_min, "Relative alpha change to stop at")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", e.max_iter, "Iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--k-order", e.k_order,
                  "Frequencies spanning the signal subspace in the noise "
                  "update (default: adaptive)");
  cmd->add_option("--update", e.update, "Alpha update rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"row-sum", "paired-sum"}));
}

io::Json em_config_json(const EmOptions& e) {
  return io::Json{{"sigma2_init", e.sigma2_init},
                  {"alpha_init", e.alpha_init},
                  {"eps_min", e.eps_min},
                  {"max_iter", e.max_iter},
                  {"k_order", e.k_order ? io::Json(*e.k_order) : io::Json(nullptr)},
                  {"update_variant", e.update}};
}

io::PriorArtifact load_prior(const std::string& path) {
  return io::prior_from_json(io::parse_json(io::read_file(path)));
}

void print_error(const std::string& code, const std::string& message,
                 const io::Json& detail = nullptr) {
  std::cerr << io::Json{{"code", code}, {"message", message}, {"detail", detail}}.dump()
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse spectral priors and label planning for periodic signals"};
  app.set_version_flag("--version", std::string(io::toolkit_version()));
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Write the two-tone synthetic dataset");
  std::uint64_t synth_seed = 0;
  std::size_t synth_slices = 5;
  std::string synth_out = "synthetic.csv";
  synth->add_option("--seed", synth_seed, "Random seed")->required();
  synth->add_option("--slices", synth_slices, "Number of slices")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("-o,--output", synth_out, "Output file (.csv or .json)")
      ->capture_default_str();

  // fit-prior --------------------------------------------------------------
  auto* fit = app.add_subcommand("fit-prior", "Fit and prune the sparse spectral prior");
  DataOptions fit_data;
  GridOptions fit_grid;
  EmOptions fit_em;
  double fit_prune = 0.01;
  std::string fit_out = "prior.json";
  std::string fit_alpha_csv;
  add_data_options(fit, fit_data);
  add_grid_options(fit, fit_grid);
  add_em_options(fit, fit_em);
  fit->add_option("--prune-ratio", fit_prune, "Keep alphas above this share of the largest")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  fit->add_option("-o,--output", fit_out, "Prior artifact")->capture_default_str();
  fit->add_option("--alpha-csv", fit_alpha_csv, "Also write the alpha spectrum as CSV");

  // plan-labels ------------------------------------------------------------
  auto* plan = app.add_subcommand("plan-labels", "Greedy labeling order from a prior");
  std::string plan_prior;
  std::size_t plan_k = 0;
  std::string plan_measure = "trace";
  std::string plan_direction = "minimize";
  std::string plan_out = "plan.json";
  plan->add_option("--prior", plan_prior, "Prior artifact")->required()->check(CLI::ExistingFile);
  plan->add_option("--k", plan_k, "Number of labels to plan")->required()->check(CLI::PositiveNumber);
  plan->add_option("--measure", plan_measure, "Spread measure")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "det_root", "max_eigenvalue"}));
  plan->add_option("--direction", plan_direction, "minimize, or maximize for the worst plan")
      ->capture_default_str()
      ->check(CLI::IsMember({"minimize", "maximize"}));
  plan->add_option("-o,--output", plan_out, "Plan artifact")->capture_default_str();

  // predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Posterior curve and band from labels");
  std::string predict_prior;
  std::string predict_labels;
  std::string predict_out = "prediction.json";
  std::string predict_csv;
  predict->add_option("--prior", predict_prior, "Prior artifact")->required()->check(CLI::ExistingFile);
  predict->add_option("--labels", predict_labels, "Labels (.json or .csv index,value)")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("-o,--output", predict_out, "Prediction artifact")->capture_default_str();
  predict->add_option("--csv", predict_csv, "Also write t,mean,std as CSV");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-slice-out study with random baselines");
  DataOptions eval_data;
  GridOptions eval_grid;
  EmOptions eval_em;
  sl::JackknifeConfig eval_cfg;
  std::string eval_measure = "trace";
  std::string eval_scope = "all";
  std::string eval_out = "report.json";
  std::string eval_csv_dir;
  std::uint64_t eval_seed = 0;
  add_data_options(evaluate, eval_data);
  add_grid_options(evaluate, eval_grid);
  add_em_options(evaluate, eval_em);
  evaluate->add_option("--prune-ratio", eval_cfg.prune_ratio, "Prune ratio")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--k-max", eval_cfg.k_max, "Largest plan length")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--draws", eval_cfg.baseline_draws, "Random subsets per k")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", eval_seed, "Random seed")->required();
  evaluate->add_option("--measure", eval_measure, "Spread measure")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "det_root", "max_eigenvalue"}));
  evaluate->add_option("--nll-scope", eval_scope, "Score all points or unlabeled ones only")
      ->capture_default_str()
      ->check(CLI::IsMember({"all", "unlabeled"}));
  evaluate->add_option("-o,--output", eval_out, "Report artifact")->capture_default_str();
  evaluate->add_option("--csv-dir", eval_csv_dir, "Also write per-fold curve CSVs here");

  // wsc --------------------------------------------------------------------
  auto* wsc = app.add_subcommand("wsc", "Weak-submodularity constant of the trace objective");
  std::string wsc_prior;
  bool wsc_exact = false;
  std::size_t wsc_samples = 30000;
  std::optional<std::uint64_t> wsc_seed;
  std::size_t wsc_bins = 50;
  bool wsc_keep = false;
  std::string wsc_out = "wsc.json";
  wsc->add_option("--prior", wsc_prior, "Prior artifact")->required()->check(CLI::ExistingFile);
  wsc->add_flag("--exact", wsc_exact, "Enumerate all nested pairs (N <= 14)");
  wsc->add_option("--samples", wsc_samples, "Sampled ratios")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  wsc->add_option("--seed", wsc_seed, "Random seed (required unless --exact)");
  wsc->add_option("--bins", wsc_bins, "Histogram bins")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  wsc->add_flag("--include-samples", wsc_keep, "Store every sampled ratio");
  wsc->add_option("-o,--output", wsc_out, "WSC artifact")->capture_default_str();

  // serve ------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the labeling session service");
  sl::ServeOptions serve_opts;
  std::string serve_journal;
  std::string serve_static;
  serve->add_option("--host", serve_opts.host, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_opts.port, "Port")
      ->capture_default_str()
      ->check(CLI::Range(1, 65535));
  serve->add_option("--journal", serve_journal, "Append-only journal for crash recovery");
  serve->add_option("--static-dir", serve_static, "Serve a UI bundle from this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage_error", e.what());
    return 2;
  }
  if (*wsc && !wsc_exact && !wsc_seed) {
    print_error("usage_error", "wsc: --seed is required unless --exact is given");
    return 2;
  }

  try {
    if (*synth) {
      const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(synth_seed, synth_slices));
      const fs::path path = output_path(synth_out);
      io::write_dataset(path, y, io::infer_format(path));
      std::cout << path.string() << "\n";
    } else if (*fit) {
      const sl::Dataset y = fit_data.load();
      const io::PriorArtifact prior = io::make_prior_artifact(
          y, fit_grid.m_max, fit_grid.spacing, fit_em.config(), fit_prune, fit_data.path);
      io::Json doc = io::prior_to_json(prior);
      doc["seeds"] = io::Json::object();
      write_artifact(fit_out, doc);
      if (!fit_alpha_csv.empty()) {
        io::write_file(output_path(fit_alpha_csv), io::alpha_spectrum_csv(prior));
      }
    } else if (*plan) {
      const sl::PlannerModel model = io::planner_model(load_prior(plan_prior));
      const sl::LabelPlan p =
          sl::greedy_plan(model, plan_k, sl::parse_spread_measure(plan_measure),
                          sl::parse_direction(plan_direction));
      io::Json config{{"prior", plan_prior},
                      {"k", plan_k},
                      {"measure", plan_measure},
                      {"direction", plan_direction}};
      io::Json doc = io::plan_to_json(p, config);
      doc["seeds"] = io::Json::object();
      write_artifact(plan_out, doc);
    } else if (*predict) {
      const io::PriorArtifact prior = load_prior(predict_prior);
      const sl::PlannerModel model = io::planner_model(prior);
      const auto labels = io::load_labels(predict_labels);
      io::Json config{{"prior", predict_prior}, {"labels", predict_labels}};
      io::Json doc = io::prediction_to_json(model, prior.times, labels, config);
      doc["seeds"] = io::Json::object();
      write_artifact(predict_out, doc);
      if (!predict_csv.empty()) {
        io::write_file(output_path(predict_csv), io::prediction_csv(doc));
      }
    } else if (*evaluate) {
      const sl::Dataset y = eval_data.load();
      const sl::TransferMatrix a = sl::build_transfer_matrix(
          y.time_grid(), sl::build_frequency_grid(eval_grid.m_max, eval_grid.spacing));
      eval_cfg.seed = eval_seed;
      eval_cfg.measure = sl::parse_spread_measure(eval_measure);
      eval_cfg.scope = sl::parse_nll_scope(eval_scope);
      const auto reports = sl::jackknife(y, a, eval_em.config(), eval_cfg);
      io::Json config{{"data", eval_data.path},
                      {"frequency_grid", {{"m_max", eval_grid.m_max}, {"spacing", eval_grid.spacing}}},
                      {"em", em_config_json(eval_em)},
                      {"prune_ratio", eval_cfg.prune_ratio},
                      {"k_max", eval_cfg.k_max},
                      {"draws", eval_cfg.baseline_draws},
                      {"measure", eval_measure},
                      {"nll_scope", eval_scope}};
      io::Json doc = io::report_to_json(reports, config);
      doc["seeds"] = {{"seed", eval_seed}};
      write_artifact(eval_out, doc);
      if (!eval_csv_dir.empty()) {
        const fs::path dir = output_path(eval_csv_dir);
        for (const sl::EvalReport& r : reports) {
          io::write_file(dir / ("curves_" + r.left_out_slice + ".csv"),
                         io::report_curves_csv(r));
        }
      }
    } else if (*wsc) {
      const sl::PlannerModel model = io::planner_model(load_prior(wsc_prior));
      io::Json config{{"prior", wsc_prior}, {"exact", wsc_exact}};
      io::Json doc;
      if (wsc_exact) {
        doc = io::wsc_exact_to_json(sl::exact_wsc(model), config);
        doc["seeds"] = io::Json::object();
      } else {
        config["samples"] = wsc_samples;
        config["bins"] = wsc_bins;
        const sl::WscEstimate est = sl::estimate_wsc(model, wsc_samples, *wsc_seed);
        doc = io::wsc_estimate_to_json(est, wsc_bins, wsc_keep, config);
        doc["seeds"] = {{"seed", *wsc_seed}};
      }
      write_artifact(wsc_out, doc);
    } else if (*serve) {
      if (!serve_journal.empty()) serve_opts.journal = serve_journal;
      if (!serve_static.empty()) serve_opts.static_dir = serve_static;
      std::cout << "listening on " << serve_opts.host << ":" << serve_opts.port << std::endl;
      if (!sl::serve(serve_opts)) {
        print_error("io_error", "cannot listen on " + serve_opts.host + ":" +
                                    std::to_string(serve_opts.port));
        return 1;
      }
    }
  } catch (const sl::Error& e) {
    print_error(e.code(), e.what(), io::Json{{"subcommand", app.get_subcommands().front()->get_name()}});
    return 1;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return 1;
  }
  return 0;
}
