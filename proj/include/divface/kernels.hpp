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

#ifndef DIVFACE__KERNELS_HPP_
#define DIVFACE__KERNELS_HPP_

#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace divface
{

enum class Execution
{
  Serial,
  Parallel,
};

/// Pairwise distance between flattened shapes restricted to a vertex mask.
enum class PairMetric
{
  /// || mask (.) (a - b) ||_2 over the flattened coordinates.
  MaskedNorm,
  /// Mean over selected vertices of the per-vertex Euclidean distance.
  MaskedMeanVertex,
};

/// Symmetric M x M matrix of pairwise distances with a zero diagonal.
///
/// The serial path is the reference: one straightforward loop per pair. The
/// parallel path gathers the masked coordinates once and splits the pair
/// list across OpenMP threads; entries agree with the reference to rounding.
Eigen::MatrixXd pairwise_distances(
  const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask, PairMetric metric,
  Execution execution = Execution::Parallel);

/// Columns of `latents` (d x M) decoded through a linear map: mean + W z.
Eigen::MatrixXd linear_decode_batch(
  const Eigen::MatrixXd & weights, const Eigen::VectorXd & mean, const Eigen::MatrixXd & latents,
  Execution execution = Execution::Parallel);

}  // namespace divface

#endif  // DIVFACE__KERNELS_HPP_
