#pragma once

#include "veal/dualbranch/model.hpp"

namespace veal::dualbranch {

// Stands in for a pretrained LLM's knowledge of the landmark vocabulary: a
// fixed random isometry P (d_v -> C) carries each landmark's text vector
// into the token embedding of its name words, so the words of a landmark
// never seen in training still line up with its visual evidence.
//
//   word(i, s)      -> gain * normalize(P (t_i + entity_weight * sum_j a_ij)
//                                      + slot_weight * u_s)
//   shared word     -> gain * normalize(P proto_c + slot_weight * u_s)
//   category c      -> gain * normalize(P proto_c + slot_weight * u_last)
//   entity e        -> entity_gain * P a_e
//
// u_s are unit vectors orthogonal to the range of P. Requires
// C >= d_v + name slots + 1.
struct LexicalPriorOptions {
  double gain = 4.0;
  double slot_weight = 0.5;
  double entity_gain = 1.0;
  // How much of a landmark's entity attributes its name words carry.
  double entity_weight = 0.5;
  // Adapter starts as the exact linear lift x -> P x (W1 = [I, -I],
  // W2 = [P; -P]^T, using gelu(x) - gelu(-x) = x). Needs C >= 2 d_v.
  bool lift_adapter = true;
  double adapter_gain = 1.0;
  // Resampler values start as the same lift (Wv = P, Wo = I), so its tokens
  // live in the space the adapter writes to.
  bool lift_resampler = true;
};

// Per landmark: t_i + entity_weight * (sum of its entities' attribute
// vectors), in input space. Landmarks without a record keep t_i.
std::vector<std::vector<double>> landmark_knowledge(const synthland::Dataset& dataset,
                                                    double entity_weight);

void apply_lexical_prior(DualBranchParams& params, const DualBranchConfig& config,
                         const synthland::Dataset& dataset,
                         const LexicalPriorOptions& options = {});

}  // namespace veal::dualbranch
