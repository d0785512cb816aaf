// Copyright 2026 The polval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polval/polval.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "polval/counterfactual.hpp"
#include "polval/dataset_io.hpp"
#include "polval/errors.hpp"
#include "polval/hte.hpp"
#include "polval/inference.hpp"
#include "polval/report.hpp"
#include "polval/service.hpp"
#include "polval/simulate.hpp"
#include "polval/survey.hpp"

struct polval_run {
  polval::RunConfig config;
  std::uint64_t seed = 0;
  std::optional<polval::Dataset> data;
  polval::LoadReport load_report;
  std::optional<polval::TreatmentEffectMatrix> external;
  std::optional<polval::TeBuildResult> te;
  std::optional<polval::PreferenceParams> fitted;
  std::optional<polval::SurveyEstimate> survey;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

template <typename F>
polval_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return POLVAL_OK;
  } catch (const polval::ConvergenceError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_CONVERGENCE;
  } catch (const polval::EstimationError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_ESTIMATION;
  } catch (const polval::DataError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_DATA;
  } catch (const polval::ConfigError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_CONFIG;
  } catch (const polval::DomainError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_DOMAIN;
  } catch (const polval::StateError& e) {
    g_last_error = e.what();
    return POLVAL_ERR_STATE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return POLVAL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return POLVAL_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw polval::ConfigError(fmt::format("{} must not be NULL", what));
}

polval::ReportMeta meta(const polval_run& run, const char* command) {
  return {command, run.config.fingerprint(), run.seed};
}

polval::Dataset& ensure_data(polval_run& run) {
  if (!run.data) {
    if (run.config.paths.households.empty()) {
      throw polval::StateError("no households loaded and no households path configured");
    }
    auto loaded = polval::load_dataset(run.config.paths.households, run.config);
    run.data = std::move(loaded.data);
    run.load_report = loaded.report;
  }
  return *run.data;
}

bool uses_external(const polval::RunConfig& c) {
  for (const auto& [_, e] : c.estimators) {
    if (e == polval::TeEstimator::kExternal) return true;
  }
  return false;
}

const polval::TreatmentEffectMatrix* ensure_external(polval_run& run) {
  if (!uses_external(run.config)) return run.external ? &*run.external : nullptr;
  if (!run.external) {
    if (run.config.paths.treatment_effects.empty()) {
      throw polval::StateError("external treatment effects requested but no TE path configured");
    }
    run.external = polval::load_te_csv(run.config.paths.treatment_effects);
  }
  return &*run.external;
}

polval::TeBuildResult& ensure_te(polval_run& run) {
  if (!run.te) {
    auto& data = ensure_data(run);
    run.te = polval::build_te_matrix(data, run.config.estimators, run.config.forest,
                                     ensure_external(run));
  }
  return *run.te;
}

polval::SurveyEstimate& ensure_survey(polval_run& run) {
  if (!run.survey) {
    if (run.config.paths.survey.empty()) {
      throw polval::StateError("survey weighting needs a survey path in the config");
    }
    run.survey = polval::aggregate(polval::load_survey_csv(run.config.paths.survey), run.seed);
  }
  return *run.survey;
}

const polval::PreferenceParams& ensure_params(polval_run& run) {
  if (!run.fitted) {
    if (run.config.paths.params.empty() ||
        !std::filesystem::exists(run.config.paths.params)) {
      throw polval::StateError("no fitted preferences; run infer first or configure paths.params");
    }
    run.fitted = polval::params_from_json(polval::load_report_json(run.config.paths.params));
  }
  return *run.fitted;
}

std::size_t default_k(polval_run& run, std::size_t n) {
  if (run.config.k) return *run.config.k;
  std::size_t k = 0;
  for (const auto& h : ensure_data(run).households) k += h.treated ? 1 : 0;
  return std::clamp<std::size_t>(k, 1, n);
}

polval_run* create(polval::RunConfig config) {
  auto* run = new polval_run;
  run->seed = config.optimizer.seed;
  run->config = std::move(config);
  return run;
}

}  // namespace

extern "C" {

const char* polval_version(void) { return "0.1.0"; }

const char* polval_last_error(void) { return g_last_error.c_str(); }

const char* polval_status_name(polval_status status) {
  switch (status) {
    case POLVAL_OK:
      return "ok";
    case POLVAL_ERR_DATA:
      return "data error";
    case POLVAL_ERR_CONVERGENCE:
      return "non-convergence";
    case POLVAL_ERR_CONFIG:
      return "configuration error";
    case POLVAL_ERR_DOMAIN:
      return "domain error";
    case POLVAL_ERR_STATE:
      return "state error";
    case POLVAL_ERR_ESTIMATION:
      return "estimation error";
    case POLVAL_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

void polval_free(char* text) { std::free(text); }

polval_status polval_run_create(const char* config_path, polval_run** out) {
  return guard([&] {
    require(config_path, "config_path");
    require(out, "out");
    *out = create(polval::load_run_config_resolved(config_path));
  });
}

polval_status polval_run_create_from_json(const char* config_json, const char* base_dir,
                                          polval_run** out) {
  return guard([&] {
    require(config_json, "config_json");
    require(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw polval::ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    auto config = polval::run_config_from_json(j);
    if (base_dir) {
      const std::filesystem::path base(base_dir);
      for (auto* p : {&config.paths.households, &config.paths.treatment_effects,
                      &config.paths.survey, &config.paths.params, &config.paths.output_dir}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) {
          *p = (base / *p).lexically_normal().string();
        }
      }
    }
    *out = create(std::move(config));
  });
}

void polval_run_destroy(polval_run* run) { delete run; }

polval_status polval_run_set_seed(polval_run* run, uint64_t seed) {
  return guard([&] {
    require(run, "run");
    run->seed = seed;
    run->config.optimizer.seed = seed;
    run->config.bootstrap.seed = seed;
    run->config.frontier.seed = seed;
    run->config.forest.rng_seed = seed;
    run->te.reset();
  });
}

polval_status polval_run_fingerprint(const polval_run* run, char** out) {
  return guard([&] {
    require(run, "run");
    put(out, run->config.fingerprint());
  });
}

polval_status polval_run_output_dir(const polval_run* run, char** out) {
  return guard([&] {
    require(run, "run");
    put(out, run->config.paths.output_dir);
  });
}

polval_status polval_run_load_households(polval_run* run, const char* path, size_t* n_loaded,
                                         size_t* n_filtered) {
  return guard([&] {
    require(run, "run");
    auto loaded = polval::load_dataset(path ? std::string(path) : run->config.paths.households,
                                       run->config);
    run->data = std::move(loaded.data);
    run->load_report = loaded.report;
    run->te.reset();
    if (n_loaded) *n_loaded = run->data->size();
    if (n_filtered) *n_filtered = run->load_report.n_filtered;
  });
}

polval_status polval_run_load_te(polval_run* run, const char* path) {
  return guard([&] {
    require(run, "run");
    const std::string p = path ? std::string(path) : run->config.paths.treatment_effects;
    if (p.empty()) throw polval::ConfigError("no treatment-effects path given or configured");
    run->external = polval::load_te_csv(p);
    for (const auto& o : run->config.outcomes) {
      run->config.estimators[o.name] = polval::TeEstimator::kExternal;
    }
    run->te.reset();
  });
}

polval_status polval_run_load_params(polval_run* run, const char* path) {
  return guard([&] {
    require(run, "run");
    require(path, "path");
    run->fitted = polval::params_from_json(polval::load_report_json(path));
  });
}

polval_status polval_run_n_households(const polval_run* run, size_t* out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    if (!run->data) throw polval::StateError("no households loaded");
    *out = run->data->size();
  });
}

polval_status polval_run_fit_te(polval_run* run, char** json, char** text) {
  return guard([&] {
    require(run, "run");
    run->te.reset();
    auto& fit = ensure_te(*run);
    auto j = polval::fit_te_json(fit, *run->data, meta(*run, "fit-te"));
    j["n_rows_read"] = run->load_report.n_rows;
    j["n_filtered"] = run->load_report.n_filtered;
    put(json, j.dump(2));
    put(text, polval::fit_te_text(fit, *run->data));
  });
}

polval_status polval_run_save_te(const polval_run* run, const char* path) {
  return guard([&] {
    require(run, "run");
    require(path, "path");
    if (!run->te) throw polval::StateError("no treatment effects fitted");
    polval::save_te_csv(path, run->te->te);
  });
}

polval_status polval_run_characterize(polval_run* run, char** json, char** text) {
  return guard([&] {
    require(run, "run");
    const auto result =
        polval::characterize_decision_rule(ensure_data(*run), run->config.optimizer);
    put(json, polval::estimate_json(result, meta(*run, "characterize")).dump(2));
    put(text, polval::estimate_text(result, "Decision-rule characterization"));
  });
}

polval_status polval_run_infer(polval_run* run, char** json, char** text) {
  return guard([&] {
    require(run, "run");
    auto& te = ensure_te(*run);
    const auto result =
        polval::estimate_preferences(*run->data, te.te, run->config.optimizer);
    run->fitted = result.params;
    auto j = polval::estimate_json(result, meta(*run, "infer"));
    put(json, j.dump(2));
    put(text, polval::estimate_text(result, "Revealed preferences"));
  });
}

polval_status polval_run_bootstrap(polval_run* run, int replicates, char** json, char** text) {
  return guard([&] {
    require(run, "run");
    auto& te = ensure_te(*run);
    const auto point = polval::estimate_preferences(*run->data, te.te, run->config.optimizer);
    run->fitted = point.params;
    polval::PipelineConfig pc;
    pc.estimators = run->config.estimators;
    pc.forest = run->config.forest;
    pc.optimizer = run->config.optimizer;
    pc.external = ensure_external(*run);
    pc.cluster_resampling = run->config.bootstrap.cluster;
    const int b = replicates > 0 ? replicates : run->config.bootstrap.replicates;
    const auto boot = polval::bootstrap(*run->data, pc, b, run->config.bootstrap.seed);
    put(json, polval::bootstrap_json(point, boot, meta(*run, "bootstrap")).dump(2));
    std::string t = polval::estimate_text(point, "Revealed preferences (bootstrap SE)", &boot.se);
    t += fmt::format("Bootstrap draws: {} requested, {} retained, {} corner solutions excluded\n",
                     boot.n_requested, boot.draws.size(), boot.n_excluded_corner);
    put(text, t);
  });
}

polval_status polval_run_counterfactual(polval_run* run, const char* params_json, size_t k,
                                        char** json, char** text) {
  return guard([&] {
    require(run, "run");
    auto& te = ensure_te(*run);
    polval::PreferenceParams params;
    if (params_json) {
      try {
        params = polval::params_from_json(nlohmann::json::parse(params_json));
      } catch (const nlohmann::json::parse_error& e) {
        throw polval::ConfigError(fmt::format("parameters are not valid JSON: {}", e.what()));
      }
    } else {
      params = ensure_params(*run);
    }
    const std::size_t kk = k > 0 ? k : default_k(*run, te.te.rows());
    auto opt = run->config.optimizer;
    opt.throw_on_nonconvergence = false;
    const auto result = polval::run_counterfactual(params, te.te, *run->data, kk, opt);
    put(json, polval::counterfactual_json(result, params, kk, meta(*run, "counterfactual")).dump(2));
    put(text, polval::counterfactual_text(result, kk));
  });
}

polval_status polval_run_frontier(polval_run* run, const char* weighting, size_t k, char** json,
                                  char** text, char** plot_csv) {
  return guard([&] {
    require(run, "run");
    auto& te = ensure_te(*run);
    const auto w = weighting ? polval::parse_frontier_weighting(weighting)
                             : run->config.frontier.weighting;
    std::map<std::string, double> omega;
    if (w == polval::FrontierWeighting::kWelfareWeighted) omega = ensure_params(*run).omega;
    if (w == polval::FrontierWeighting::kSurveyWeighted) omega = ensure_survey(*run).omega();
    const std::size_t kk = k > 0 ? k : default_k(*run, te.te.rows());
    const auto result = polval::frontier(te.te, *run->data, kk, run->config.frontier.n_directions,
                                         w, w == polval::FrontierWeighting::kRaw ? nullptr : &omega,
                                         run->config.frontier.seed);
    put(json, polval::frontier_json(result, meta(*run, "frontier")).dump(2));
    put(text, polval::frontier_text(result));
    put(plot_csv, polval::frontier_plot_csv(result));
  });
}

polval_status polval_run_serve(polval_run* run, const char* host, int port) {
  return guard([&] {
    require(run, "run");
    polval::ServiceState state;
    state.config = run->config;
    state.data = ensure_data(*run);
    state.te = ensure_te(*run).te;
    try {
      state.fitted = ensure_params(*run);
    } catch (const polval::StateError&) {
    }
    try {
      state.survey = ensure_survey(*run);
    } catch (const polval::StateError&) {
    }
    polval::Service service(std::move(state));
    service.run(host ? host : "127.0.0.1", port);
  });
}

polval_status polval_survey(const char* survey_csv_path, uint64_t seed, int bootstrap_draws,
                            char** json, char** text) {
  return guard([&] {
    require(survey_csv_path, "survey_csv_path");
    const auto est = polval::aggregate(polval::load_survey_csv(survey_csv_path), seed,
                                       bootstrap_draws > 0 ? bootstrap_draws : 200);
    put(json, polval::survey_json(est, {"survey", "", seed}).dump(2));
    put(text, polval::survey_text(est));
  });
}

polval_status polval_simulate(const char* options_json, const char* out_dir) {
  return guard([&] {
    require(out_dir, "out_dir");
    nlohmann::json o = nlohmann::json::object();
    if (options_json) {
      try {
        o = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::parse_error& e) {
        throw polval::ConfigError(fmt::format("options are not valid JSON: {}", e.what()));
      }
    }
    polval::SimulationConfig cfg;
    std::size_t respondents = 200;
    try {
      for (const auto& [key, v] : o.items()) {
        if (key == "n") {
          cfg.n = v.get<std::size_t>();
        } else if (key == "seed") {
          cfg.seed = v.get<std::uint64_t>();
        } else if (key == "ranking") {
          const auto s = v.get<std::string>();
          if (s != "full" && s != "binary") throw polval::ConfigError("ranking must be full or binary");
          cfg.ranking = s == "full" ? polval::RankingMode::kFull : polval::RankingMode::kBinary;
        } else if (key == "binary_share") {
          cfg.binary_share = v.get<double>();
        } else if (key == "effect_shape") {
          const auto s = v.get<std::string>();
          if (s != "linear" && s != "step") throw polval::ConfigError("effect_shape must be linear or step");
          cfg.effect_shape = s == "linear" ? polval::EffectShape::kLinear : polval::EffectShape::kStep;
        } else if (key == "outcome_noise") {
          cfg.outcome_noise = v.get<double>();
        } else if (key == "log_curvature") {
          cfg.log_curvature = v.get<bool>();
        } else if (key == "survey_respondents") {
          respondents = v.get<std::size_t>();
        } else {
          throw polval::ConfigError(fmt::format("unknown simulate option '{}'", key));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw polval::ConfigError(fmt::format("malformed simulate options: {}", e.what()));
    }
    const auto sim = polval::simulate(cfg);
    const auto survey = polval::simulate_survey(sim.truth, respondents, cfg.seed);
    polval::write_simulation(sim, survey, out_dir);
  });
}

}  // extern "C"
