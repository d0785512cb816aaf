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

#include "polval/service.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <httplib.h>

#include "polval/errors.hpp"
#include "polval/report.hpp"

namespace polval {

using nlohmann::json;

Service::Service(ServiceState state) : state_(std::move(state)) {
  fingerprint_ = state_.config.fingerprint();
  for (const auto& h : state_.data.households) k_default_ += h.treated ? 1 : 0;
  if (state_.config.k) k_default_ = *state_.config.k;
  if (!state_.te) return;
  k_default_ = std::clamp<std::size_t>(k_default_, 1, state_.te->rows());

  const ReportMeta meta{"frontier", fingerprint_, state_.config.frontier.seed};
  for (auto w : {FrontierWeighting::kRaw, FrontierWeighting::kWelfareWeighted,
                 FrontierWeighting::kSurveyWeighted}) {
    const std::map<std::string, double>* omega = nullptr;
    std::map<std::string, double> survey_omega;
    if (w == FrontierWeighting::kWelfareWeighted) {
      if (!state_.fitted) {
        frontier_errors_[w] = "no fitted preferences loaded";
        continue;
      }
      omega = &state_.fitted->omega;
    } else if (w == FrontierWeighting::kSurveyWeighted) {
      if (!state_.survey) {
        frontier_errors_[w] = "no survey estimate loaded";
        continue;
      }
      survey_omega = state_.survey->omega();
      omega = &survey_omega;
    }
    try {
      const auto result = polval::frontier(*state_.te, state_.data, k_default_,
                                           state_.config.frontier.n_directions, w, omega,
                                           state_.config.frontier.seed);
      frontiers_[w] = frontier_json(result, meta);
    } catch (const Error& e) {
      frontier_errors_[w] = e.what();
    }
  }
}

Service::~Service() { stop(); }

ServiceResponse Service::error(int status, const std::string& message, const json& fields) const {
  return {status, {{"error", message}, {"fields", fields}, {"fingerprint", fingerprint_}}};
}

ServiceResponse Service::summary() const {
  json j = {{"fingerprint", fingerprint_},
            {"n", state_.data.size()},
            {"welfare_covariates", state_.data.welfare_covariates},
            {"heterogeneity_covariates", state_.data.het_covariates},
            {"k_default", k_default_},
            {"te_loaded", state_.te.has_value()}};
  json outs = json::array();
  for (const auto& o : state_.data.outcomes) {
    outs.push_back({{"name", o.name},
                    {"transform", std::string(to_string(o.transform))},
                    {"numeraire", o.is_numeraire},
                    {"bad", o.is_bad},
                    {"units", o.units}});
  }
  j["outcomes"] = outs;
  j["fitted_params"] = state_.fitted ? to_json(*state_.fitted) : json(nullptr);
  j["survey"] = state_.survey ? json(state_.survey->omega_median) : json(nullptr);
  return {200, j};
}

ServiceResponse Service::counterfactual(const std::string& body) const {
  if (!state_.te) return error(409, "no treatment effects loaded; run fit-te first");
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error& e) {
    return error(400, "request body is not valid JSON", {{"body", e.what()}});
  }
  if (!req.is_object()) return error(400, "request body must be a JSON object");

  json fields = json::object();
  PreferenceParams params = PreferenceParams::neutral(state_.data.welfare_covariates,
                                                       state_.data.weighted_outcomes());
  json omega_echo = json::object();
  for (const auto& c : state_.data.welfare_covariates) omega_echo[c] = 0.0;
  if (req.contains("omega")) {
    if (!req["omega"].is_object()) {
      fields["omega"] = "must be an object of log1.01 increments";
    } else {
      for (const auto& [k, v] : req["omega"].items()) {
        if (!params.omega.count(k)) {
          fields["omega." + k] = "unknown welfare covariate";
        } else if (!v.is_number() || !std::isfinite(v.get<double>())) {
          fields["omega." + k] = "must be a finite number";
        } else {
          params.omega[k] = from_increments(v.get<double>());
          omega_echo[k] = v.get<double>();
        }
      }
    }
  }
  if (req.contains("lambda")) {
    if (!req["lambda"].is_object()) {
      fields["lambda"] = "must be an object";
    } else {
      for (const auto& [k, v] : req["lambda"].items()) {
        if (!params.lambda.count(k)) {
          fields["lambda." + k] = "unknown weighted outcome";
        } else if (!v.is_number() || !std::isfinite(v.get<double>())) {
          fields["lambda." + k] = "must be a finite number";
        } else {
          params.lambda[k] = v.get<double>();
        }
      }
    }
  }
  if (req.contains("C")) {
    if (!req["C"].is_number() || !std::isfinite(req["C"].get<double>())) {
      fields["C"] = "must be a finite number";
    } else {
      params.C = req["C"].get<double>();
    }
  }
  std::size_t k = k_default_;
  if (req.contains("k")) {
    const auto& jk = req["k"];
    if (!jk.is_number_integer() || jk.get<std::int64_t>() <= 0) {
      fields["k"] = "must be a positive integer";
    } else if (jk.get<std::uint64_t>() > state_.te->rows()) {
      fields["k"] = fmt::format("must not exceed N = {}", state_.te->rows());
    } else {
      k = jk.get<std::size_t>();
    }
  }
  for (const auto& [key, _] : req.items()) {
    if (key != "omega" && key != "lambda" && key != "C" && key != "k") {
      fields[key] = "unknown field";
    }
  }
  if (!fields.empty()) return error(400, "invalid counterfactual request", fields);

  try {
    OptimizerConfig opt = state_.config.optimizer;
    opt.throw_on_nonconvergence = false;
    const auto result = run_counterfactual(params, *state_.te, state_.data, k, opt);
    json j = counterfactual_json(result, params, k, ReportMeta{"counterfactual", fingerprint_, opt.seed});
    j.erase("selected");
    j["echo"] = {{"omega", omega_echo},
                 {"lambda", params.lambda},
                 {"C", params.C},
                 {"k", k}};
    return {200, j};
  } catch (const Error& e) {
    return error(422, e.what());
  }
}

ServiceResponse Service::frontier(const std::string& weighting) const {
  if (!state_.te) return error(409, "no treatment effects loaded; run fit-te first");
  FrontierWeighting w;
  try {
    w = parse_frontier_weighting(weighting.empty() ? "raw" : weighting);
  } catch (const Error& e) {
    return error(400, e.what(), {{"weighting", "must be raw, welfare or survey"}});
  }
  if (auto it = frontiers_.find(w); it != frontiers_.end()) return {200, it->second};
  auto err = frontier_errors_.find(w);
  return error(409, err == frontier_errors_.end() ? "frontier unavailable" : err->second);
}

std::unique_ptr<httplib::Server> Service::make_server() const {
  auto server = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  server->Get("/summary", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, summary());
  });
  server->Post("/counterfactual", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, counterfactual(req.body));
  });
  server->Get("/frontier", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, frontier(req.has_param("weighting") ? req.get_param_value("weighting") : "raw"));
  });
  server->Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
  return server;
}

int Service::start(const std::string& host, int port) {
  if (server_) throw StateError("service already started");
  server_ = make_server();
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    server_.reset();
    throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (server_) throw StateError("service already started");
  server_ = make_server();
  if (!server_->bind_to_port(host, port)) {
    server_.reset();
    throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  }
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace polval
