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

#include "divface/kernels.hpp"

#include "divface/error.hpp"

#include <cmath>

namespace divface
{

namespace
{

void check_shapes(const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask)
{
  require(!shapes.empty(), "pairwise_distances: no shapes");
  const auto dim = 3 * static_cast<Eigen::Index>(mask.size());
  for (const auto & s : shapes) {
    require(s.size() == dim, "pairwise_distances: shape length does not match the mask");
  }
  require(mask.count() > 0, "pairwise_distances: empty mask");
}

double pair_serial(const Eigen::VectorXd & a, const Eigen::VectorXd & b, const VertexMask & mask, PairMetric metric)
{
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) {
      continue;
    }
    const auto k = 3 * static_cast<Eigen::Index>(v);
    const double sq = (a.segment<3>(k) - b.segment<3>(k)).squaredNorm();
    acc += metric == PairMetric::MaskedNorm ? sq : std::sqrt(sq);
    ++n;
  }
  return metric == PairMetric::MaskedNorm ? std::sqrt(acc) : acc / static_cast<double>(n);
}

Eigen::MatrixXd pairwise_serial(const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask, PairMetric metric)
{
  const auto m = static_cast<Eigen::Index>(shapes.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = pair_serial(
        shapes[static_cast<std::size_t>(i)], shapes[static_cast<std::size_t>(j)], mask, metric);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

Eigen::MatrixXd pairwise_parallel(const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask, PairMetric metric)
{
  const auto m = static_cast<Eigen::Index>(shapes.size());
  const std::vector<int> verts = mask.indices();
  const auto nv = static_cast<Eigen::Index>(verts.size());
  // Gathered masked coordinates: one row-major 3 x nv block per shape.
  Eigen::MatrixXd packed(3 * nv, m);
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto & shape = shapes[static_cast<std::size_t>(s)];
    for (Eigen::Index v = 0; v < nv; ++v) {
      packed.block<3, 1>(3 * v, s) = shape.segment<3>(3 * static_cast<Eigen::Index>(verts[static_cast<std::size_t>(v)]));
    }
  }
  const Eigen::Index pairs = m * (m - 1) / 2;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> index;
  index.reserve(static_cast<std::size_t>(pairs));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      index.emplace_back(i, j);
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  const bool norm = metric == PairMetric::MaskedNorm;
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < pairs; ++p) {
    const auto [i, j] = index[static_cast<std::size_t>(p)];
    double acc = 0.0;
    if (norm) {
      acc = std::sqrt((packed.col(i) - packed.col(j)).squaredNorm());
    } else {
      for (Eigen::Index v = 0; v < nv; ++v) {
        acc += (packed.block<3, 1>(3 * v, i) - packed.block<3, 1>(3 * v, j)).norm();
      }
      acc /= static_cast<double>(nv);
    }
    out(i, j) = acc;
    out(j, i) = acc;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd pairwise_distances(
  const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask, PairMetric metric, Execution execution)
{
  check_shapes(shapes, mask);
  return execution == Execution::Serial ? pairwise_serial(shapes, mask, metric)
                                        : pairwise_parallel(shapes, mask, metric);
}

Eigen::MatrixXd linear_decode_batch(
  const Eigen::MatrixXd & weights, const Eigen::VectorXd & mean, const Eigen::MatrixXd & latents,
  Execution execution)
{
  require(weights.cols() == latents.rows(), "linear_decode_batch: latent dimension mismatch");
  require(weights.rows() == mean.size(), "linear_decode_batch: mean length mismatch");
  const Eigen::Index m = latents.cols();
  Eigen::MatrixXd out(weights.rows(), m);
  if (execution == Execution::Serial) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index r = 0; r < weights.rows(); ++r) {
        double acc = mean[r];
        for (Eigen::Index c = 0; c < weights.cols(); ++c) {
          acc += weights(r, c) * latents(c, j);
        }
        out(r, j) = acc;
      }
    }
    return out;
  }
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double acc = mean[r];
      for (Eigen::Index c = 0; c < weights.cols(); ++c) {
        acc += weights(r, c) * latents(c, j);
      }
      out(r, j) = acc;
    }
  }
  return out;
}

}  // namespace divface
