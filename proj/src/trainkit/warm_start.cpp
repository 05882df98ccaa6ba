#include <algorithm>
#include <cmath>

#include "veal/dualbranch/lexical_prior.hpp"
#include "veal/errors.hpp"
#include "veal/numkit/random.hpp"
#include "veal/trainkit/trainkit.hpp"

namespace veal::trainkit {

namespace {

void unit_noise(numkit::Rng& rng, std::span<double> out) {
  double norm = 0.0;
  while (!(norm > 0.0)) {
    norm = 0.0;
    for (double& x : out) {
      x = rng.normal();
      norm += x * x;
    }
  }
  norm = std::sqrt(norm);
  for (double& x : out) x /= norm;
}

}  // namespace

void WarmStartConfig::validate() const {
  if (batch_size < 1) throw ConfigError("field 'warm_start.batch_size': must be at least 1");
  if (!(peak_lr >= 0.0)) throw ConfigError("field 'warm_start.peak_lr': must be >= 0");
}

synthland::Dataset text_image_dataset(const synthland::Dataset& dataset, double entity_weight,
                                      std::uint64_t seed) {
  const auto& src = dataset.store;
  const std::size_t d = src.dim;
  const std::size_t n = dataset.records.size();
  if (src.num_images != n) throw FormatError("image store and record list disagree in length");
  const auto knowledge = dualbranch::landmark_knowledge(dataset, entity_weight);

  synthland::Dataset out = dataset;
  auto& st = out.store;
  st.num_images = 2 * n;
  st.lr.assign(2 * n * src.lr_patches * d, 0.0);
  st.hr.assign(2 * n * src.hr_patches * d, 0.0);
  auto lr_row = [&](std::size_t image, std::size_t p) {
    return std::span<double>(st.lr).subspan((image * src.lr_patches + p) * d, d);
  };
  auto hr_row = [&](std::size_t image, std::size_t p) {
    return std::span<double>(st.hr).subspan((image * src.hr_patches + p) * d, d);
  };

  for (std::size_t i = 0; i < n; ++i) {
    auto v = knowledge.at(static_cast<std::size_t>(dataset.records[i].landmark_id));
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw DegenerateVectorError("landmark knowledge vector has zero norm");
    for (double& x : v) x /= norm;
    for (std::size_t p = 0; p < src.lr_patches; ++p) std::copy(v.begin(), v.end(), lr_row(i, p).begin());
    for (std::size_t p = 0; p < src.hr_patches; ++p) std::copy(v.begin(), v.end(), hr_row(i, p).begin());
  }

  numkit::Rng rng(numkit::mix_seed(seed, 0x7e47));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = dataset.records[i];
    const std::size_t image = n + i;
    const std::size_t E = rec.entity_ids.size();
    for (std::size_t p = 0; p < src.lr_patches; ++p) unit_noise(rng, lr_row(image, p));
    std::vector<std::size_t> carrier(src.hr_patches, E);
    for (std::size_t j = 0; j < E; ++j) {
      for (std::size_t row : synthland::designated_patches(src.hr_patches, E, j)) carrier[row] = j;
    }
    for (std::size_t p = 0; p < src.hr_patches; ++p) {
      auto row = hr_row(image, p);
      if (carrier[p] < E) {
        auto e = src.entity_vec(rec.entity_ids[carrier[p]]);
        std::copy(e.begin(), e.end(), row.begin());
      } else {
        unit_noise(rng, row);
      }
    }
    auto copy = rec;
    copy.image_id += "_entities";
    out.records.push_back(std::move(copy));
  }
  return out;
}

DualBranchParams warm_start(const DualBranchParams& initial, const DualBranchConfig& model_config,
                            const synthland::Dataset& dataset, const WarmStartConfig& config,
                            double entity_weight, std::uint64_t seed) {
  config.validate();
  if (config.epochs == 0 || dataset.records.empty()) return dualbranch::clone_params(initial);
  const synthland::Dataset text = text_image_dataset(dataset, entity_weight, seed);
  const std::size_t n = dataset.records.size();

  DualBranchConfig lm_config = model_config;
  lm_config.high_res_branch = false;
  DualBranchConfig hr_config = model_config;
  hr_config.high_res_branch = true;
  const AblationFlags lm_flags{false, false, false};
  const AblationFlags hr_flags{true, false, false};

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.peak_lr = config.peak_lr;
  tc.batch_size = config.batch_size;
  tc.seed = seed;

  DualBranchParams params = dualbranch::clone_params(initial);
  params.entity_table.set_requires_grad(false);
  params.tok_emb.set_requires_grad(false);
  std::vector<Tensor> tensors;
  for (const auto& np : params.named()) tensors.push_back(np.tensor);

  // Each epoch interleaves low-res-only batches (first kind) with high-res
  // batches (both kinds), so the LM reads either prompt layout.
  std::vector<std::size_t> lm_order(n);
  std::vector<std::size_t> hr_order(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    hr_order[i] = i;
    if (i < n) lm_order[i] = i;
  }
  const std::size_t lm_steps = steps_per_epoch(n, config.batch_size);
  const std::size_t hr_steps = steps_per_epoch(2 * n, config.batch_size);
  const std::size_t total_steps = (lm_steps + hr_steps) * config.epochs;

  AdamWState state;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    numkit::Rng rng(numkit::mix_seed(seed, 0x3a000 + epoch));
    rng.shuffle(lm_order);
    rng.shuffle(hr_order);
    std::size_t a = 0, b = 0;
    while (a < lm_steps || b < hr_steps) {
      // Keep the two streams in proportion.
      const bool use_hr = a >= lm_steps || (b < hr_steps && b * lm_steps <= a * hr_steps);
      const auto& order = use_hr ? hr_order : lm_order;
      const std::size_t k = use_hr ? b++ : a++;
      const std::size_t begin = k * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::span<const std::size_t> batch(order.data() + begin, end - begin);

      for (auto& t : tensors) t.zero_grad();
      const BatchLosses losses = batch_loss(params, use_hr ? hr_config : lm_config, text, batch,
                                            use_hr ? hr_flags : lm_flags, tc.weights);
      if (!std::isfinite(losses.total.item())) {
        throw NumericError("non-finite warm-start loss at step " + std::to_string(step));
      }
      losses.total.backward();
      adamw_step(tensors, state, cosine_lr(step, total_steps, tc), tc, step);
      ++step;
    }
  }
  for (auto& t : tensors) t.zero_grad();
  params.entity_table.set_requires_grad(true);
  params.tok_emb.set_requires_grad(true);
  return params;
}

}  // namespace veal::trainkit
