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

#ifndef DIVFACE__DPP_HPP_
#define DIVFACE__DPP_HPP_

#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <vector>

namespace divface
{

/// Quality-diversity DPP kernel L = diag(q) S diag(q).
struct DppKernel
{
  Eigen::MatrixXd L;
  Eigen::VectorXd q;
  Eigen::MatrixXd S;
  double k = 1.0;

  /// Symmetry, unit similarity diagonal, q in (0, 1] and PSD (min eigenvalue >= -1e-9).
  void validate() const;
};

/// exp(-k || mask (.) (a - b) ||_2).
double similarity(const Mesh & a, const Mesh & b, const VertexMask & mask, double k);

/// exp(-max(0, z^T z - 3 sqrt(d))).
double quality(const Eigen::VectorXd & z);

/// d quality / d z: zero inside the ball, -2 z q on and outside its boundary.
Eigen::VectorXd quality_gradient(const Eigen::VectorXd & z);

/// Kernel over flattened completions, similarity measured on `mask`.
DppKernel build_kernel(
  const std::vector<Eigen::VectorXd> & completions, const std::vector<Eigen::VectorXd> & latents,
  const VertexMask & mask, double k);
DppKernel build_kernel(
  const std::vector<Mesh> & completions, const std::vector<Eigen::VectorXd> & latents,
  const VertexMask & mask, double k);

/// -tr(I - (L + I)^-1), evaluated from the eigenvalues of L.
double expected_cardinality_loss(const Eigen::MatrixXd & L);

/// Gradient of expected_cardinality_loss with respect to L: -(L + I)^-2.
Eigen::MatrixXd loss_gradient_wrt_kernel(const Eigen::MatrixXd & L);

/// sum_Y |Y| det(L_Y) / det(L + I) by subset enumeration; M <= 10.
double brute_force_expected_cardinality(const Eigen::MatrixXd & L);

}  // namespace divface

#endif  // DIVFACE__DPP_HPP_
