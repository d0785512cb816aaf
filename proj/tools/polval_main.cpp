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

// Command-line front end over the C API.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polval/polval.h"

namespace {

struct Owned {
  char* p = nullptr;
  ~Owned() { polval_free(p); }
  char** out() { return &p; }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct RunHandle {
  polval_run* run = nullptr;
  ~RunHandle() { polval_run_destroy(run); }
};

int exit_code(polval_status s) {
  switch (s) {
    case POLVAL_OK:
      return 0;
    case POLVAL_ERR_CONVERGENCE:
    case POLVAL_ERR_ESTIMATION:
      return 2;
    default:
      return 1;
  }
}

int fail(polval_status s) {
  std::cerr << "polval: " << polval_status_name(s) << ": " << polval_last_error() << "\n";
  return exit_code(s);
}

void write(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string te;
  std::string params;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("-c,--config", c.config, "RunConfig JSON file");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "Seed for every random stream");
  cmd->add_option("-o,--out", c.out_dir, "Report directory (default: config paths.output_dir)");
}

// Creates the run, applies overrides; returns non-zero exit code on failure.
int open_run(const Common& c, RunHandle& h) {
  if (auto s = polval_run_create(c.config.c_str(), &h.run); s != POLVAL_OK) return fail(s);
  if (c.seed) {
    if (auto s = polval_run_set_seed(h.run, *c.seed); s != POLVAL_OK) return fail(s);
  }
  if (!c.te.empty()) {
    if (auto s = polval_run_load_te(h.run, c.te.c_str()); s != POLVAL_OK) return fail(s);
  }
  if (!c.params.empty()) {
    if (auto s = polval_run_load_params(h.run, c.params.c_str()); s != POLVAL_OK) return fail(s);
  }
  return 0;
}

std::filesystem::path out_dir(const Common& c, const RunHandle& h) {
  if (!c.out_dir.empty()) return c.out_dir;
  Owned dir;
  polval_run_output_dir(h.run, dir.out());
  return dir.str().empty() ? std::filesystem::path(".") : std::filesystem::path(dir.str());
}

int emit(const std::filesystem::path& dir, const std::string& name, const Owned& json,
         const Owned& text) {
  write(dir / (name + ".json"), json.str());
  write(dir / (name + ".txt"), text.str());
  std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polval: revealed and stated social preferences for program targeting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(polval_version()));

  Common c;
  std::string save_te;
  int replicates = 0;
  std::size_t k = 0;
  std::string weighting;
  std::string survey_input;
  int survey_draws = 200;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t sim_n = 2000;
  std::string sim_ranking = "full";
  std::string sim_shape = "linear";
  double sim_noise = 0.05;
  bool sim_curvature = false;
  std::size_t sim_respondents = 200;

  auto* characterize = app.add_subcommand("characterize", "Characterize the observed decision rule");
  add_common(characterize, c);

  auto* fit_te = app.add_subcommand("fit-te", "Estimate household treatment effects");
  add_common(fit_te, c);
  fit_te->add_option("--save-te", save_te, "Write the TE matrix CSV here");

  auto* infer = app.add_subcommand("infer", "Estimate revealed preferences");
  add_common(infer, c);
  infer->add_option("--te", c.te, "Use this TE CSV instead of fitting");

  auto* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors");
  add_common(boot, c);
  boot->add_option("--te", c.te, "Use this TE CSV instead of fitting");
  boot->add_option("-B,--replicates", replicates, "Bootstrap replicates (default: config)");

  auto* cf = app.add_subcommand("counterfactual", "Allocate under given preferences");
  add_common(cf, c);
  cf->add_option("--te", c.te, "Use this TE CSV instead of fitting");
  cf->add_option("--params", c.params, "Preference parameters JSON (e.g. an infer report)");
  cf->add_option("-k,--k", k, "Number of households to treat");

  auto* fr = app.add_subcommand("frontier", "Trace the outcome frontier");
  add_common(fr, c);
  fr->add_option("--te", c.te, "Use this TE CSV instead of fitting");
  fr->add_option("--params", c.params, "Preferences for welfare weighting");
  fr->add_option("-k,--k", k, "Number of households to treat");
  fr->add_option("--weighting", weighting, "raw, welfare or survey")
      ->check(CLI::IsMember({"raw", "welfare", "survey", "welfare_weighted", "survey_weighted"}));

  auto* sv = app.add_subcommand("survey", "Aggregate stated preferences from MPL responses");
  add_common(sv, c, false);
  sv->add_option("-i,--input", survey_input, "Survey CSV")->required();
  sv->add_option("--draws", survey_draws, "Respondent bootstrap resamples");

  auto* sim = app.add_subcommand("simulate", "Write a synthetic run");
  sim->add_option("--seed", c.seed, "Seed");
  sim->add_option("-o,--out", c.out_dir, "Output directory")->required();
  sim->add_option("-n,--n", sim_n, "Households");
  sim->add_option("--ranking", sim_ranking, "full or binary")->check(CLI::IsMember({"full", "binary"}));
  sim->add_option("--effect-shape", sim_shape, "linear or step")
      ->check(CLI::IsMember({"linear", "step"}));
  sim->add_option("--noise", sim_noise, "Outcome noise sd");
  sim->add_flag("--curvature", sim_curvature, "Rank on log consumption utility");
  sim->add_option("--respondents", sim_respondents, "Synthetic survey respondents");

  auto* serve = app.add_subcommand("serve", "Serve the what-if HTTP endpoints");
  add_common(serve, c);
  serve->add_option("--te", c.te, "Use this TE CSV instead of fitting");
  serve->add_option("--params", c.params, "Fitted preferences JSON");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "polval: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << failed->help();
    return 1;
  }

  try {
    if (sim->parsed()) {
      nlohmann::json opts = {{"n", sim_n},
                             {"seed", c.seed.value_or(0)},
                             {"ranking", sim_ranking},
                             {"effect_shape", sim_shape},
                             {"outcome_noise", sim_noise},
                             {"log_curvature", sim_curvature},
                             {"survey_respondents", sim_respondents}};
      if (auto s = polval_simulate(opts.dump().c_str(), c.out_dir.c_str()); s != POLVAL_OK) {
        return fail(s);
      }
      std::cout << "wrote synthetic run to " << c.out_dir << "\n";
      return 0;
    }
    if (sv->parsed()) {
      Owned json, text;
      if (auto s = polval_survey(survey_input.c_str(), c.seed.value_or(0), survey_draws,
                                 json.out(), text.out());
          s != POLVAL_OK) {
        return fail(s);
      }
      return emit(c.out_dir.empty() ? "." : c.out_dir, "survey", json, text);
    }

    RunHandle h;
    if (int rc = open_run(c, h)) return rc;
    const auto dir = out_dir(c, h);
    Owned json, text;
    polval_status s = POLVAL_OK;
    std::string name;
    if (characterize->parsed()) {
      name = "characterize";
      s = polval_run_characterize(h.run, json.out(), text.out());
    } else if (fit_te->parsed()) {
      name = "fit_te";
      s = polval_run_fit_te(h.run, json.out(), text.out());
      if (s == POLVAL_OK) {
        const std::string path = save_te.empty() ? (dir / "te.csv").string() : save_te;
        std::filesystem::create_directories(std::filesystem::path(path).parent_path().empty()
                                                ? "."
                                                : std::filesystem::path(path).parent_path());
        s = polval_run_save_te(h.run, path.c_str());
      }
    } else if (infer->parsed()) {
      name = "infer";
      s = polval_run_infer(h.run, json.out(), text.out());
    } else if (boot->parsed()) {
      name = "bootstrap";
      s = polval_run_bootstrap(h.run, replicates, json.out(), text.out());
    } else if (cf->parsed()) {
      name = "counterfactual";
      s = polval_run_counterfactual(h.run, nullptr, k, json.out(), text.out());
    } else if (fr->parsed()) {
      name = "frontier";
      Owned plot;
      s = polval_run_frontier(h.run, weighting.empty() ? nullptr : weighting.c_str(), k,
                              json.out(), text.out(), plot.out());
      if (s == POLVAL_OK) write(dir / "frontier_plot.csv", plot.str());
    } else if (serve->parsed()) {
      std::cerr << "serving on http://" << host << ":" << port << "\n";
      s = polval_run_serve(h.run, host.c_str(), port);
      return s == POLVAL_OK ? 0 : fail(s);
    }
    if (s != POLVAL_OK) return fail(s);
    return emit(dir, name, json, text);
  } catch (const std::exception& e) {
    std::cerr << "polval: " << e.what() << "\n";
    return 1;
  }
}
