#include "gradcheck_suite.hpp"

#include "veal/dualbranch/model.hpp"
#include "veal/numkit/gradcheck.hpp"
#include "veal/numkit/random.hpp"
#include "veal/synthland/types.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::cli {

// The objective sits near 30 here; h = 1e-6 leaves round-off of order
// 1e-9 on gradients as small as 1e-4.
constexpr double kStep = 1e-5;

std::vector<GradcheckEntry> run_gradcheck_suite(std::uint64_t seed) {
  synthland::SynthConfig sc;
  sc.num_landmarks = 2;
  sc.num_categories = 2;
  sc.entities_per_landmark = 2;
  sc.embed_dim = 4;
  sc.lr_patches = 3;
  sc.hr_patches = 8;
  sc.seed = seed;
  const synthland::Dataset ds = synthland::generate(sc);

  dualbranch::DualBranchConfig mc;
  mc.fit_to(ds);
  mc.model_dim = 8;
  mc.num_queries = 3;
  mc.ffn_dim = 8;
  mc.max_seq_len = 16;
  mc.seed = seed;
  dualbranch::DualBranchParams params = dualbranch::init_params(mc);

  numkit::Rng rng(numkit::mix_seed(seed, 0x9c));
  for (auto& np : params.named()) {
    for (double& x : np.tensor.mutable_data()) x = 0.5 * rng.normal();
  }
  params.log_temp.mutable_data()[0] = 0.0;

  const std::size_t batch[] = {0, 1};
  const trainkit::AblationFlags flags{true, true, true};
  const objectives::LossWeights weights;
  auto objective = [&] { return trainkit::batch_loss(params, mc, ds, batch, flags, weights).total; };

  std::vector<GradcheckEntry> out;
  for (auto& np : params.named()) {
    GradcheckEntry e{np.name, np.group, np.tensor.size(), 0.0};
    e.max_rel_error = numkit::finite_diff_check(objective, np.tensor, kStep);
    // Other leaves accumulate gradient during the check; clear them.
    for (auto& other : params.named()) other.tensor.zero_grad();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace veal::cli
