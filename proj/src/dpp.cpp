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

#include "divface/dpp.hpp"

#include "divface/error.hpp"
#include "divface/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace divface
{

namespace
{

void require_symmetric(const Eigen::MatrixXd & L, const char * who)
{
  require(L.rows() == L.cols(), std::string(who) + ": kernel must be square");
  const double scale = 1.0 + (L.size() > 0 ? L.cwiseAbs().maxCoeff() : 0.0);
  if (L.size() > 0 && (L - L.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError(std::string(who) + ": kernel is not symmetric");
  }
}

}  // namespace

void DppKernel::validate() const
{
  const auto m = L.rows();
  require(L.cols() == m && S.rows() == m && S.cols() == m && q.size() == m, "DPP kernel dimension mismatch");
  require_symmetric(L, "DppKernel");
  for (Eigen::Index i = 0; i < m; ++i) {
    require(S(i, i) == 1.0, "similarity diagonal must be 1");
    require(q[i] > 0.0 && q[i] <= 1.0, "quality must lie in (0, 1]");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L, Eigen::EigenvaluesOnly);
  require(m == 0 || eig.eigenvalues().minCoeff() >= -1e-9, "DPP kernel is not positive semidefinite");
}

double similarity(const Mesh & a, const Mesh & b, const VertexMask & mask, double k)
{
  require(k > 0.0, "similarity scale k must be positive");
  require(a.num_vertices() == b.num_vertices() && mask.size() == a.num_vertices(),
    "similarity: dimension mismatch");
  require(mask.count() > 0, "similarity: empty mask");
  double sq = 0.0;
  for (int v : mask.indices()) {
    sq += (a.vertices().row(v) - b.vertices().row(v)).squaredNorm();
  }
  return std::exp(-k * std::sqrt(sq));
}

double quality(const Eigen::VectorXd & z)
{
  require(z.size() >= 1, "quality: empty latent");
  const double excess = z.squaredNorm() - 3.0 * std::sqrt(static_cast<double>(z.size()));
  return std::exp(-std::max(0.0, excess));
}

Eigen::VectorXd quality_gradient(const Eigen::VectorXd & z)
{
  const double excess = z.squaredNorm() - 3.0 * std::sqrt(static_cast<double>(z.size()));
  if (excess < 0.0) {
    return Eigen::VectorXd::Zero(z.size());
  }
  return -2.0 * std::exp(-excess) * z;
}

DppKernel build_kernel(
  const std::vector<Eigen::VectorXd> & completions, const std::vector<Eigen::VectorXd> & latents,
  const VertexMask & mask, double k)
{
  const auto m = static_cast<Eigen::Index>(completions.size());
  require(m >= 2, "build_kernel: need at least 2 completions");
  require(latents.size() == completions.size(), "build_kernel: one latent per completion required");
  require(k > 0.0, "build_kernel: k must be positive");
  const Eigen::MatrixXd dist = pairwise_distances(completions, mask, PairMetric::MaskedNorm);
  DppKernel out;
  out.k = k;
  out.S = (-k * dist.array()).exp().matrix();
  out.q.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    require(latents[static_cast<std::size_t>(i)].size() == latents.front().size(), "build_kernel: latent size mismatch");
    out.q[i] = quality(latents[static_cast<std::size_t>(i)]);
  }
  out.L = out.q.asDiagonal() * out.S * out.q.asDiagonal();
  return out;
}

DppKernel build_kernel(
  const std::vector<Mesh> & completions, const std::vector<Eigen::VectorXd> & latents,
  const VertexMask & mask, double k)
{
  std::vector<Eigen::VectorXd> flats;
  flats.reserve(completions.size());
  for (const auto & c : completions) {
    flats.push_back(c.flat());
  }
  return build_kernel(flats, latents, mask, k);
}

double expected_cardinality_loss(const Eigen::MatrixXd & L)
{
  require_symmetric(L, "expected_cardinality_loss");
  if (L.size() == 0) {
    return 0.0;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L, Eigen::EigenvaluesOnly);
  double card = 0.0;
  for (double lambda : eig.eigenvalues()) {
    card += lambda / (1.0 + lambda);
  }
  return -card;
}

Eigen::MatrixXd loss_gradient_wrt_kernel(const Eigen::MatrixXd & L)
{
  require_symmetric(L, "loss_gradient_wrt_kernel");
  const auto m = L.rows();
  const Eigen::MatrixXd shifted = L + Eigen::MatrixXd::Identity(m, m);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw NumericError("loss_gradient_wrt_kernel: L + I is singular");
  }
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
  const Eigen::MatrixXd grad = -(inv * inv);
  return 0.5 * (grad + grad.transpose());
}

double brute_force_expected_cardinality(const Eigen::MatrixXd & L)
{
  require(L.rows() == L.cols(), "brute_force_expected_cardinality: kernel must be square");
  const auto m = static_cast<int>(L.rows());
  if (m > 10) {
    throw InputError("brute_force_expected_cardinality: M = " + std::to_string(m) + " exceeds the limit of 10");
  }
  double weighted = 0.0;
  for (unsigned subset = 1; subset < (1u << m); ++subset) {
    std::vector<int> idx;
    for (int i = 0; i < m; ++i) {
      if (subset & (1u << i)) {
        idx.push_back(i);
      }
    }
    const auto s = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(s, s);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) {
        sub(a, b) = L(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
    }
    weighted += static_cast<double>(s) * sub.determinant();
  }
  const double norm = (L + Eigen::MatrixXd::Identity(m, m)).determinant();
  return weighted / norm;
}

}  // namespace divface
