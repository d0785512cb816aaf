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

#ifndef POLVAL_SERVICE_HPP_
#define POLVAL_SERVICE_HPP_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "polval/counterfactual.hpp"
#include "polval/dataset_io.hpp"
#include "polval/survey.hpp"

namespace httplib {
class Server;
}

namespace polval {

// Everything the read-only service answers from. `te` may be empty when the
// run has not been fitted yet; such requests get 409.
struct ServiceState {
  RunConfig config;
  Dataset data;
  std::optional<TreatmentEffectMatrix> te;
  std::optional<PreferenceParams> fitted;
  std::optional<SurveyEstimate> survey;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  explicit Service(ServiceState state);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ServiceResponse summary() const;
  ServiceResponse counterfactual(const std::string& request_body) const;
  ServiceResponse frontier(const std::string& weighting) const;

  const std::string& fingerprint() const { return fingerprint_; }

  // Binds to host:port (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop() is called.
  void run(const std::string& host, int port);
  void stop();

 private:
  ServiceResponse error(int status, const std::string& message,
                        const nlohmann::json& fields = nlohmann::json::object()) const;
  std::unique_ptr<httplib::Server> make_server() const;

  ServiceState state_;
  std::string fingerprint_;
  std::size_t k_default_ = 0;
  std::map<FrontierWeighting, nlohmann::json> frontiers_;
  std::map<FrontierWeighting, std::string> frontier_errors_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace polval

#endif  // POLVAL_SERVICE_HPP_
