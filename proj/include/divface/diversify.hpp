// Copyright 2026 The divface Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DIVFACE__DIVERSIFY_HPP_
#define DIVFACE__DIVERSIFY_HPP_

#include "divface/dpp.hpp"
#include "divface/fitter.hpp"
#include "divface/latent.hpp"
#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace divface
{

struct DiversifyHyper
{
  int num_samples = 10;
  int n_comp = 200;
  double lambda_s = 10.0;
  double lambda_dpp = 1.0;
  double eta = 1e-2;
  /// Similarity scale; 0 picks 1 / median pairwise masked distance of the
  /// initial samples.
  double k = 0.0;
  /// Drop the quality factor (q = 1 for every sample). Ablation switch.
  bool disable_quality = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DiversityTerms
{
  double total = 0.0;
  double fidelity = 0.0;
  double dpp = 0.0;
};

/// lambda_s * sum_j mean_{visible v} |c_j,v - partial_v|_1 + lambda_dpp * expected-cardinality loss of
/// the completions restricted to `occlusion`. Visible means not occluded.
/// When `gradients` is non-null it receives one d-vector per latent.
DiversityTerms diversity_loss(
  const LatentModel & model, const std::vector<Eigen::VectorXd> & latents, const Mesh & partial,
  const VertexMask & occlusion, const DiversifyHyper & hyper, double k,
  std::vector<Eigen::VectorXd> * gradients = nullptr);

/// 1 / median off-diagonal masked distance; 1 when the median is 0.
double auto_similarity_scale(const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask);

struct CompletionSet
{
  std::vector<Mesh> completions;
  std::vector<Eigen::VectorXd> latents;
  VertexMask occlusion;
  /// Posterior draws the optimisation started from.
  std::vector<Eigen::VectorXd> initial_latents;
  double k = 1.0;
  /// One entry per iteration plus the final state.
  std::vector<DiversityTerms> trace;
};

CompletionSet optimize_completions(
  const LatentModel & model, const Mesh & partial, const VertexMask & occlusion, const DiversifyHyper & hyper);
CompletionSet optimize_completions(
  const LatentModel & model, const FitResult & fit, const VertexMask & occlusion, const DiversifyHyper & hyper);

/// Decodes z(a) = a z1 + (1 - a) z2 for a running from 1 down to 0 in `steps` even steps.
std::vector<Mesh> interpolate(
  const LatentModel & model, const Eigen::VectorXd & z1, const Eigen::VectorXd & z2, int steps);

}  // namespace divface

#endif  // DIVFACE__DIVERSIFY_HPP_
