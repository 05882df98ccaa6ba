#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "veal/errors.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::veknow {

std::string scores_csv(std::span<const KnowledgeScore> scores) {
  std::string out = "image_id,sim,rsr,gt_rank\n";
  char buf[128];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%zu\n", s.sim_score, s.rsr, s.gt_rank);
    out += s.image_id;
    out += buf;
  }
  return out;
}

std::vector<KnowledgeScore> parse_scores_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "image_id,sim,rsr,gt_rank") {
    throw FormatError("scores.csv: missing header");
  }
  std::vector<KnowledgeScore> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    KnowledgeScore s;
    std::string sim, rsr, rank;
    if (!std::getline(row, s.image_id, ',') || !std::getline(row, sim, ',') ||
        !std::getline(row, rsr, ',') || !std::getline(row, rank)) {
      throw FormatError("scores.csv: malformed row '" + line + "'");
    }
    s.sim_score = std::stod(sim);
    s.rsr = std::stod(rsr);
    s.gt_rank = std::stoul(rank);
    out.push_back(std::move(s));
  }
  return out;
}

std::string subset_json(std::span<const std::string> ids) {
  return nlohmann::json(std::vector<std::string>(ids.begin(), ids.end())).dump() + "\n";
}

std::vector<std::string> parse_subset_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("subset json: ") + e.what());
  }
}

std::string subset_filename(Method method, std::size_t k) {
  return "subset_" + method_name(method) + "_" + std::to_string(k) + ".json";
}

}  // namespace veal::veknow
