#include <algorithm>
#include <numeric>

#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/veknow/veknow.hpp"

namespace veal::veknow {

std::string method_name(Method method) {
  switch (method) {
    case Method::kHDS: return "HDS";
    case Method::kHSS: return "HSS";
    case Method::kLCS: return "LCS";
    case Method::kBRS: return "BRS";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kHDS, Method::kHSS, Method::kLCS, Method::kBRS}) {
    if (name == method_name(m)) return m;
  }
  throw UsageError("unknown selection method '" + name + "'; expected one of {HDS,HSS,LCS,BRS}");
}

namespace {

// 1 = lowest value; tied values share the lowest rank of their group.
std::vector<std::size_t> ranks_from_worst(const std::vector<double>& values) {
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t below = 0;
    for (double v : values) below += v < values[i];
    ranks[i] = below + 1;
  }
  return ranks;
}

}  // namespace

std::vector<std::string> select(std::span<const KnowledgeScore> scores, const SelectionSpec& spec) {
  const std::size_t n = scores.size();
  if (spec.k > n) {
    throw CapacityError("subset size k = " + std::to_string(spec.k) + " exceeds the " +
                        std::to_string(n) + " scored images");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const auto by_id = [&](std::size_t a, std::size_t b) {
    return scores[a].image_id < scores[b].image_id;
  };

  switch (spec.method) {
    case Method::kHDS:
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = scores[a];
        const auto& y = scores[b];
        if (x.rsr != y.rsr) return x.rsr > y.rsr;
        if (x.sim_score != y.sim_score) return x.sim_score > y.sim_score;
        return by_id(a, b);
      });
      break;
    case Method::kHSS:
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = scores[a];
        const auto& y = scores[b];
        if (x.sim_score != y.sim_score) return x.sim_score > y.sim_score;
        if (x.rsr != y.rsr) return x.rsr > y.rsr;
        return by_id(a, b);
      });
      break;
    case Method::kLCS: {
      std::vector<double> rsr(n), sim(n);
      for (std::size_t i = 0; i < n; ++i) {
        rsr[i] = scores[i].rsr;
        sim[i] = scores[i].sim_score;
      }
      const auto rr = ranks_from_worst(rsr);
      const auto sr = ranks_from_worst(sim);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const std::size_t ka = rr[a] + sr[a];
        const std::size_t kb = rr[b] + sr[b];
        if (ka != kb) return ka < kb;
        return by_id(a, b);
      });
      break;
    }
    case Method::kBRS: {
      // Partial Fisher-Yates: the first k slots are a uniform sample.
      numkit::Rng rng(spec.seed);
      for (std::size_t i = 0; i < spec.k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
      }
      break;
    }
  }

  std::vector<std::string> out;
  out.reserve(spec.k);
  for (std::size_t i = 0; i < spec.k; ++i) out.push_back(scores[idx[i]].image_id);
  return out;
}

}  // namespace veal::veknow
