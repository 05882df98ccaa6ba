#include <sstream>

#include "json.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

using nlohmann::ordered_json;

std::string runlog_jsonl(const RunLog& log, bool include_meta) {
  std::string out;
  ordered_json header;
  header["event"] = "config";
  header["seed"] = log.seed;
  header["ablation"] = log.ablation;
  header["config"] = log.config_json.empty() ? ordered_json::object()
                                             : ordered_json::parse(log.config_json);
  if (include_meta) header["meta"] = {{"timestamp", log.timestamp}};
  out += header.dump() + "\n";

  std::size_t next_eval = 0;
  auto flush_evals = [&](std::size_t upto) {
    while (next_eval < log.evals.size() && log.evals[next_eval].step <= upto) {
      const auto& e = log.evals[next_eval++];
      ordered_json j;
      j["event"] = "eval";
      j["step"] = e.step;
      j["n"] = e.report.total;
      j["errored"] = e.report.errored;
      j["counts"] = e.report.counts;
      j["proportions"] = e.report.proportions;
      j["accuracy"] = e.report.accuracy;
      out += j.dump() + "\n";
    }
  };
  for (const auto& s : log.steps) {
    ordered_json j;
    j["event"] = "step";
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["batch"] = s.batch;
    j["lr"] = s.lr;
    j["L_g"] = s.lg;
    if (s.le) j["L_e"] = *s.le;
    if (s.lh) j["L_h"] = *s.lh;
    j["total"] = s.total;
    out += j.dump() + "\n";
    flush_evals(s.step + 1);
  }
  flush_evals(static_cast<std::size_t>(-1));
  return out;
}

std::string strip_meta(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    auto j = ordered_json::parse(line);
    j.erase("meta");
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace veal::trainkit
