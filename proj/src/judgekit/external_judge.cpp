#include <atomic>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "veal/errors.hpp"
#include "veal/judgekit/judgekit.hpp"

namespace veal::judgekit {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw ConfigError("field 'endpoint': expected http://host[:port]/path, got '" + url + "'");
  }
  Endpoint e;
  e.host = m[1];
  if (m[2].matched) e.port = std::stoi(m[2]);
  e.path = m[3].matched ? std::string(m[3]) : "/";
  return e;
}

Level parse_reply(const std::string& body) {
  json reply;
  try {
    reply = json::parse(body);
  } catch (const json::exception&) {
    throw ProtocolError("judge reply is not JSON");
  }
  if (!reply.is_object() || !reply.contains("level") || !reply["level"].is_string()) {
    throw ProtocolError("judge reply lacks a string 'level' field: " + body.substr(0, 200));
  }
  return parse_level(reply["level"].get<std::string>());
}

}  // namespace

Level judge_external(const ExternalRequest& request, const ExternalJudgeOptions& options) {
  const Endpoint ep = parse_endpoint(options.endpoint);
  json levels = json::array();
  for (Level l : kLevels) levels.push_back(level_name(l));
  const std::string body =
      json{{"responses", request.responses}, {"ground_truth", request.ground_truth},
           {"levels", levels}}
          .dump();

  httplib::Client client(ep.host, ep.port);
  const auto usec = static_cast<long>(options.timeout_seconds * 1e6);
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);

  std::string last_error = "no attempt made";
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(options.attempts, 1); ++attempt) {
    auto res = client.Post(ep.path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("judge endpoint answered HTTP " + std::to_string(res->status));
    }
    return parse_reply(res->body);
  }
  throw Error("judge endpoint unreachable after " + std::to_string(options.attempts) +
              " attempts: " + last_error);
}

std::vector<JudgeOutcome> judge_external_batch(std::span<const ExternalRequest> requests,
                                               const ExternalJudgeOptions& options) {
  parse_endpoint(options.endpoint);
  std::vector<JudgeOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i].level = judge_external(requests[i], options);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(options.concurrency, 1), requests.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace veal::judgekit
