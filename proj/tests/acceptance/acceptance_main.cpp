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

// Acceptance checks AC-1 .. AC-9. Prints one PASS/FAIL line per criterion
// and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sparselabel/core_model.hpp"
#include "sparselabel/evaluation.hpp"
#include "sparselabel/io.hpp"
#include "sparselabel/label_planner.hpp"
#include "sparselabel/sbl_em.hpp"
#include "sparselabel/session.hpp"
#include "sparselabel/session_http.hpp"
#include "test_support.hpp"

// After Eigen: <resolv.h> defines a _res macro that clashes with it.
#include "httplib.h"

namespace sl = sparselabel;
namespace io = sparselabel::io;
namespace fs = std::filesystem;
using sl::testing::rel_diff;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

sl::TransferMatrix video_transfer() {
  return sl::build_transfer_matrix(sl::build_time_grid(300, 30.0),
                                   sl::build_frequency_grid(100, 0.075));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// AC-1 -----------------------------------------------------------------------

Outcome posterior_oracle() {
  Outcome out;
  double worst = 0.0;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> n_dist(2, 20), m_dist(0, 5), l_dist(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = n_dist(rng), m = m_dist(rng), l = l_dist(rng);
    const auto inst = sl::testing::random_instance(10'000 + trial, n, m, l);
    const sl::Matrix& a = inst.a.entries();
    const sl::Vector g = inst.hyper.gamma_vector();
    const double s2 = inst.hyper.sigma2();
    const auto tag = "instance " + std::to_string(trial);

    const auto post = sl::posterior(inst.a, inst.y, inst.hyper);
    const double d_mean = rel_diff(post.mean, sl::testing::oracle_posterior_mean(a, inst.y.values(), g, s2));
    const double d_cov = rel_diff(post.covariance, sl::testing::oracle_posterior_cov(a, g, s2));
    const double d_ev = rel_diff(sl::evidence(inst.a, inst.y, inst.hyper),
                                 sl::testing::oracle_evidence(a, inst.y.values(), g, s2));

    const sl::PlannerModel model(a, g, s2);
    const sl::LabelSet j = sl::testing::random_subset(rng, n, 0.5);
    std::vector<double> yj;
    for (std::size_t i : j.indices()) yj.push_back(inst.y.values()(static_cast<Eigen::Index>(i), 0));
    const auto rp = sl::restricted_posterior(model, j, yj);
    const sl::Matrix a_j = sl::restrict_rows(a, j);
    const sl::Matrix y_j = Eigen::Map<const sl::Matrix>(yj.data(), static_cast<Eigen::Index>(yj.size()), 1);
    const sl::Matrix oracle_cov_j = sl::testing::oracle_posterior_cov(a_j, g, s2);
    const double d_rcov = rel_diff(rp.covariance, oracle_cov_j);
    const double d_rmean = j.empty() ? rp.mean.cwiseAbs().maxCoeff()
                                     : rel_diff(sl::Matrix(rp.mean),
                                                sl::testing::oracle_posterior_mean(a_j, y_j, g, s2));
    const auto pred = sl::predictive(model, rp);
    const sl::Matrix oracle_pred =
        s2 * sl::Matrix::Identity(a.rows(), a.rows()) + a * oracle_cov_j * a.transpose();
    const double d_pred = rel_diff(pred.covariance, oracle_pred);

    for (double d : {d_mean, d_cov, d_ev, d_rcov, d_rmean, d_pred}) {
      worst = std::max(worst, d);
      out.require(d <= 1e-8, tag + " differs by " + fmt(d));
    }
  }
  if (out.pass) out.detail = "200 instances, max rel diff " + fmt(worst);
  return out;
}

// AC-2 -----------------------------------------------------------------------

Outcome support_recovery() {
  Outcome out;
  const sl::TransferMatrix a = video_transfer();
  int hits = 0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(seed));
    const auto fit = sl::fit_sparse_prior(y, a, sl::EmConfig{});
    const auto kept = sl::prune(fit, a, 0.01).kept_frequency_indices;
    if (kept == std::vector<std::size_t>{0, 4, 16}) {
      ++hits;
    } else {
      misses += " " + std::to_string(seed);
    }
  }
  out.require(hits >= 19, "only " + std::to_string(hits) + "/20 seeds kept {0,4,16}; misses:" + misses);
  if (out.pass) {
    out.detail = std::to_string(hits) + "/20 seeds keep exactly {0,4,16}";
  }
  return out;
}

// AC-3 -----------------------------------------------------------------------

Outcome gains_and_monotonicity() {
  Outcome out;
  std::mt19937_64 rng(303);
  double worst = 0.0, min_gain = INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 17);
    const auto model = sl::testing::random_planner_model(20'000 + trial, n, 1 + trial % 5);
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    sl::LabelSet j = sl::testing::random_subset(rng, n, 0.5, i);
    const sl::TraceGainState state(model, j);
    const double fast = sl::marginal_gain_fast(state, i);
    const double before = sl::testing::oracle_labeled_trace(model, j);
    j.insert(i);
    const double naive = before - sl::testing::oracle_labeled_trace(model, j);
    min_gain = std::min(min_gain, fast);
    worst = std::max(worst, rel_diff(fast, naive));
    out.require(fast > 0.0, "non-positive gain in draw " + std::to_string(trial));
    out.require(rel_diff(fast, naive) <= 1e-8,
                "fast gain differs by " + fmt(rel_diff(fast, naive)) + " in draw " + std::to_string(trial));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial % 17);
    const auto model = sl::testing::random_planner_model(30'000 + trial, n, 1 + trial % 5);
    const sl::LabelSet y = sl::testing::random_subset(rng, n, 0.6);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::size_t> x;
    for (std::size_t i : y.indices()) {
      if (coin(rng)) x.push_back(i);
    }
    const double fx = sl::trace_objective(model, sl::LabelSet(x));
    const double fy = sl::trace_objective(model, y);
    out.require(fx <= fy + 1e-12 * std::max(1.0, std::abs(fy)),
                "f(X) > f(Y) in nested pair " + std::to_string(trial));
  }
  if (out.pass) {
    out.detail = "min gain " + fmt(min_gain) + ", max fast/naive rel diff " + fmt(worst) +
                 ", 1000 nested pairs monotone";
  }
  return out;
}

// AC-4 / AC-5 ----------------------------------------------------------------

Outcome greedy_bound() {
  Outcome out;
  double min_slack = INFINITY, max_cf = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto model = sl::testing::random_planner_model(seed, 12, 2);
    const auto r = sl::bound_check(model, 3);
    // Recheck the inequality here rather than trusting the flag.
    const double rhs = (1.0 - std::exp(-1.0 / r.c_f)) * r.optimal_value;
    out.require(r.bound_satisfied && r.greedy_value >= rhs,
                "bound violated on instance " + std::to_string(seed));
    min_slack = std::min(min_slack, r.greedy_value / r.optimal_value);
    max_cf = std::max(max_cf, r.c_f);
  }
  if (out.pass) {
    out.detail = "20/20 satisfied; min f(greedy)/f(opt) " + fmt(min_slack) + ", max c_f " + fmt(max_cf);
  }
  return out;
}

Outcome sampler_soundness() {
  Outcome out;
  double max_gap = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto model = sl::testing::random_planner_model(seed, 12, 2);
    const double exact = sl::exact_wsc(model).constant;
    const auto est = sl::estimate_wsc(model, 30'000, seed);
    out.require(est.max_ratio <= exact + 1e-10,
                "sampled max exceeds exact constant on instance " + std::to_string(seed));
    max_gap = std::max(max_gap, est.max_ratio - exact);
  }
  const auto dc = sl::estimate_wsc(sl::testing::dc_only_model(12, 1.0, 0.1), 30'000, 7);
  out.require(dc.max_ratio <= 1.0 + 1e-10, "constant model ratio " + fmt(dc.max_ratio) + " > 1");
  if (out.pass) {
    out.detail = "max(sampled - exact) " + fmt(max_gap) + "; constant-model max ratio " + fmt(dc.max_ratio);
  }
  return out;
}

// AC-6 -----------------------------------------------------------------------

Outcome greedy_beats_random() {
  Outcome out;
  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(1));
  const sl::TransferMatrix a = video_transfer();
  const auto fit = sl::fit_sparse_prior(y, a, sl::EmConfig{});
  const auto model = sl::PlannerModel::from_pruned(sl::prune(fit, a, 0.01));
  const auto plan = sl::greedy_plan(model, 15, sl::SpreadMeasure::kTrace);
  std::string table;
  std::string failed;
  for (std::size_t k = 5; k <= 15; ++k) {
    const auto base = sl::random_baseline(model, k, 1000, sl::baseline_seed(1, 0, k));
    const double g = plan.spreads[k - 1];
    const bool ok = g <= base.spread_summary.p01;
    table += " k=" + std::to_string(k) + ":" + fmt(g) + (ok ? "<=" : ">") + fmt(base.spread_summary.p01);
    if (!ok) failed += " " + std::to_string(k);
    out.require(ok, "");
  }
  out.detail = (out.pass ? "greedy <= p01 for all k;" : "greedy > p01 at k =" + failed + ";") + table;
  return out;
}

// AC-7 -----------------------------------------------------------------------

Outcome nll_ordering() {
  Outcome out;
  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(1));
  sl::JackknifeConfig cfg;
  cfg.k_max = 15;
  cfg.baseline_draws = 1000;
  cfg.seed = 1;
  const auto reports = sl::jackknife(y, video_transfer(), sl::EmConfig{}, cfg);
  std::string table;
  for (const auto& r : reports) {
    const double greedy = r.greedy.nll[14];
    const double rmin = r.baseline_nll[14].min;
    const double worst = r.worst.nll[14];
    const double median = r.baseline_nll[14].p50;
    const double wb = r.worst.band_width[4];
    const double gb = r.greedy.band_width[4];
    const bool a = greedy <= rmin, b = worst >= median, c = wb >= 2.0 * gb;
    out.require(a && b && c, "");
    table += " [" + r.left_out_slice + " greedy " + fmt(greedy) + (a ? "<=" : ">") + "min " +
             fmt(rmin) + "; worst " + fmt(worst) + (b ? ">=" : "<") + "median " + fmt(median) +
             "; band " + fmt(wb) + (c ? ">=" : "<") + "2x" + fmt(gb) + "]";
  }
  out.detail = table;
  return out;
}

// AC-8 -----------------------------------------------------------------------

Outcome independence_and_determinism() {
  Outcome out;
  // Library level.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto model = sl::testing::random_planner_model(seed, 30, 3);
    const sl::LabelSet j({1, 5, 11, 12, 29});
    const auto r1 = sl::restricted_posterior(model, j, std::vector<double>{1, 2, 3, 4, 5});
    const auto r2 = sl::restricted_posterior(model, j, std::vector<double>{-9, 0, 1e4, 0.5, 7});
    out.require(r1.covariance == r2.covariance, "covariance depends on values");
    for (auto m : {sl::SpreadMeasure::kTrace, sl::SpreadMeasure::kDetRoot, sl::SpreadMeasure::kMaxEigenvalue}) {
      const auto p1 = sl::greedy_plan(model, 8, m);
      const auto p2 = sl::greedy_plan(model, 8, m);
      out.require(p1.indices == p2.indices && p1.spreads == p2.spreads, "plan not reproducible");
    }
  }
  // Sessions built from the same prior see value-independent suggestions.
  {
    const fs::path toy = fs::path(SPARSELABEL_SOURCE_DIR) / "data" / "toy_prior_n12.json";
    const auto prior = io::prior_from_json(io::parse_json(io::read_file(toy)));
    sl::Session s1("a", prior), s2("b", prior);
    for (int k = 0; k < 6; ++k) {
      const auto a = s1.next_suggestion(), b = s2.next_suggestion();
      out.require(a.index == b.index, "suggestions depend on values");
      s1.submit(a.index, 1.0 * k);
      s2.submit(b.index, -3.0 * k + 0.7);
    }
  }

  // CLI artifacts, byte for byte.
  const fs::path base = fs::temp_directory_path() / "sparselabel_acceptance";
  fs::remove_all(base);
  const std::string cli = "\"" SPARSELABEL_CLI_PATH "\"";
  const std::string toy = "\"" SPARSELABEL_SOURCE_DIR "/data/toy_prior_n12.json\"";
  const std::vector<std::pair<std::string, std::string>> steps{
      {"data.csv", "synth --seed 11 --slices 3 -o {}"},
      {"prior.json", "fit-prior --data {run}/data.csv -o {}"},
      {"plan.json", "plan-labels --prior {run}/prior.json --k 8 -o {}"},
      {"worst.json", "plan-labels --prior {run}/prior.json --k 8 --measure det_root --direction maximize -o {}"},
      {"pred.json", "predict --prior {run}/prior.json --labels {run}/labels.csv -o {}"},
      {"report.json", "evaluate --data {run}/data.csv --k-max 6 --draws 200 --seed 5 -o {}"},
      {"wsc.json", "wsc --prior " + toy + " --samples 5000 --seed 3 --include-samples -o {}"},
      {"wsc_exact.json", "wsc --prior " + toy + " --exact -o {}"},
  };
  auto expand = [](std::string s, const fs::path& run, const fs::path& file) {
    for (std::size_t p; (p = s.find("{run}")) != std::string::npos;) s.replace(p, 5, run.string());
    if (const std::size_t p = s.find("{}"); p != std::string::npos) s.replace(p, 2, file.string());
    return s;
  };
  std::vector<std::string> first;
  // Same directory and arguments both times; artifacts embed their inputs.
  const fs::path dir = base / "run";
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    io::write_file(dir / "labels.csv", "index,value\n3,2.5\n40,3.1\n200,2.2\n");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& [file, args] = steps[i];
      const std::string cmd = cli + " " + expand(args, dir, dir / file) + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        out.require(false, "command failed: " + args);
        return out;
      }
      const std::string bytes = io::read_file(dir / file);
      if (run == 0) {
        first.push_back(bytes);
      } else {
        out.require(bytes == first[i], file + " differs between runs");
      }
    }
  }
  if (out.pass) {
    out.detail = "covariances/plans value-independent; " + std::to_string(steps.size()) +
                 " CLI artifacts byte-identical across reruns";
  }
  return out;
}

// AC-9 -----------------------------------------------------------------------

Outcome service_consistency() {
  Outcome out;
  sl::SessionManager manager;
  httplib::Server server;
  sl::register_routes(server, manager);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(1));
  const auto prior = io::make_prior_artifact(y, 100, 0.075, sl::EmConfig{}, 0.01, "two_tone_seed1");
  const sl::Dataset truth = sl::generate_synthetic(sl::two_tone_spec(42, 1));

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  auto json = [&](const httplib::Result& r, int status) {
    if (!r || r->status != status) {
      throw std::runtime_error("unexpected HTTP status " + (r ? std::to_string(r->status) : "none"));
    }
    return io::parse_json(r->body);
  };

  try {
    const io::Json created =
        json(client.Post("/v1/sessions", io::Json{{"prior", io::prior_to_json(prior)}}.dump(),
                         "application/json"),
             201);
    const std::string path = "/v1/sessions/" + created.at("id").get<std::string>();
    const auto session = manager.find(created.at("id"));

    std::vector<io::Json> summaries{io::Json(nullptr)};
    std::vector<io::Label> labels;
    double last_spread = session->summary().spread;
    double worst = 0.0;
    for (int step = 0; step < 10; ++step) {
      const io::Json sug = json(client.Get(path + "/suggestion"), 200);
      const std::size_t index = sug.at("index");
      const double value = truth.values()(static_cast<Eigen::Index>(index), 0);
      const io::Json sum = json(client.Post(path + "/labels",
                                            io::Json{{"index", index}, {"value", value}}.dump(),
                                            "application/json"),
                                200);
      labels.push_back({index, value});
      const auto batch = sl::batch_summary(session->model(), labels);
      for (std::size_t i = 0; i < batch.mean.size(); ++i) {
        worst = std::max(worst, std::abs(sum.at("mean")[i].get<double>() - batch.mean[i]));
        worst = std::max(worst, std::abs(sum.at("std")[i].get<double>() - batch.std_dev[i]));
      }
      const double spread = sum.at("spread");
      out.require(spread < last_spread, "spread did not decrease at step " + std::to_string(step));
      last_spread = spread;
      summaries.push_back(sum);
    }
    out.require(worst <= 1e-10, "served posterior differs from batch by " + fmt(worst));
    for (int step = 9; step >= 0; --step) {
      const io::Json sum = json(client.Delete(path + "/labels/last"), 200);
      if (step > 0) {
        out.require(sum == summaries[static_cast<std::size_t>(step)],
                    "undo did not restore step " + std::to_string(step));
      } else {
        out.require(sum.at("label_count") == 0, "undo did not return to the prior");
      }
    }
    const auto fresh = sl::batch_summary(session->model(), {});
    out.require(session->summary() == fresh, "final state differs from a fresh session");
    if (out.pass) {
      out.detail = "10 labels over HTTP, max |served - batch| " + fmt(worst) +
                   ", spread strictly decreasing, undo exact";
    }
  } catch (const std::exception& e) {
    out.require(false, e.what());
  }
  server.stop();
  thread.join();
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC-1", 30, posterior_oracle},
      {"AC-2", 300, support_recovery},
      {"AC-3", 60, gains_and_monotonicity},
      {"AC-4", 600, greedy_bound},
      {"AC-5", 300, sampler_soundness},
      {"AC-6", 300, greedy_beats_random},
      {"AC-7", 600, nll_ordering},
      {"AC-8", 30, independence_and_determinism},
      {"AC-9", 30, service_consistency},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail = "over time budget (" + fmt(c.budget_s) + " s); " + o.detail;
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s (%.2f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
