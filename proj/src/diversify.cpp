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

#include "divface/diversify.hpp"

#include "divface/error.hpp"
#include "divface/kernels.hpp"
#include "divface/random.hpp"

#include <algorithm>
#include <cmath>

namespace divface
{

void DiversifyHyper::validate() const
{
  require(num_samples >= 2, "diversify: num_samples must be >= 2 (got " + std::to_string(num_samples) + ")");
  require(n_comp >= 0, "diversify: n_comp must be >= 0");
  require(lambda_s >= 0.0 && lambda_dpp >= 0.0, "diversify: loss weights must be >= 0");
  require(eta > 0.0, "diversify: eta must be positive");
  require(k >= 0.0, "diversify: k must be >= 0");
}

double auto_similarity_scale(const std::vector<Eigen::VectorXd> & shapes, const VertexMask & mask)
{
  const Eigen::MatrixXd dist = pairwise_distances(shapes, mask, PairMetric::MaskedNorm);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < dist.cols(); ++j) {
      values.push_back(dist(i, j));
    }
  }
  if (values.empty()) {
    return 1.0;
  }
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  double median = *mid;
  if (values.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(values.begin(), mid));
  }
  return median > 0.0 ? 1.0 / median : 1.0;
}

DiversityTerms diversity_loss(
  const LatentModel & model, const std::vector<Eigen::VectorXd> & latents, const Mesh & partial,
  const VertexMask & occlusion, const DiversifyHyper & hyper, double k, std::vector<Eigen::VectorXd> * gradients)
{
  const auto m = static_cast<Eigen::Index>(latents.size());
  require(m >= 2, "diversity_loss: need at least 2 latents");
  const auto dim = model.mean.size();
  require(3 * static_cast<Eigen::Index>(partial.num_vertices()) == dim, "diversity_loss: partial mesh size mismatch");
  require(occlusion.size() == partial.num_vertices(), "diversity_loss: occlusion mask size mismatch");
  require(occlusion.count() > 0, "diversity_loss: empty occlusion mask");
  require(k > 0.0, "diversity_loss: k must be positive");

  std::vector<Eigen::VectorXd> shapes;
  shapes.reserve(latents.size());
  for (const auto & z : latents) {
    shapes.push_back(decode_flat(model, z));
  }
  const Eigen::VectorXd target = partial.flat();
  const std::vector<int> visible = occlusion.complement().indices();
  const std::vector<int> occluded = occlusion.indices();

  DiversityTerms terms;
  std::vector<Eigen::VectorXd> cot(static_cast<std::size_t>(m), Eigen::VectorXd::Zero(dim));
  if (!visible.empty()) {
    const double wgt = 1.0 / static_cast<double>(visible.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto & c = shapes[static_cast<std::size_t>(j)];
      auto & g = cot[static_cast<std::size_t>(j)];
      for (int v : visible) {
        for (Eigen::Index a = 3 * v; a < 3 * v + 3; ++a) {
          const double r = c[a] - target[a];
          terms.fidelity += wgt * std::abs(r);
          g[a] = hyper.lambda_s * wgt * (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0));
        }
      }
    }
  }

  DppKernel kernel = build_kernel(shapes, latents, occlusion, k);
  if (hyper.disable_quality) {
    kernel.q.setOnes();
    kernel.L = kernel.S;
  }
  terms.dpp = expected_cardinality_loss(kernel.L);
  terms.total = hyper.lambda_s * terms.fidelity + hyper.lambda_dpp * terms.dpp;

  if (!gradients) {
    return terms;
  }
  gradients->assign(static_cast<std::size_t>(m), Eigen::VectorXd::Zero(model.latent_dim()));
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(m);
  if (hyper.lambda_dpp != 0.0) {
    const Eigen::MatrixXd g_l = loss_gradient_wrt_kernel(kernel.L);
    const Eigen::VectorXd & q = kernel.q;
    for (Eigen::Index i = 0; i < m; ++i) {
      dq[i] = 2.0 * (g_l.row(i).transpose().cwiseProduct(kernel.S.col(i)).cwiseProduct(q)).sum();
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double d_dist = -2.0 * k * g_l(i, j) * q[i] * q[j] * kernel.S(i, j);
        const auto & ci = shapes[static_cast<std::size_t>(i)];
        const auto & cj = shapes[static_cast<std::size_t>(j)];
        double sq = 0.0;
        for (int v : occluded) {
          sq += (ci.segment<3>(3 * v) - cj.segment<3>(3 * v)).squaredNorm();
        }
        const double dist = std::sqrt(sq);
        if (dist == 0.0) {
          continue;
        }
        const double f = hyper.lambda_dpp * d_dist / dist;
        for (int v : occluded) {
          const Eigen::Vector3d diff = ci.segment<3>(3 * v) - cj.segment<3>(3 * v);
          cot[static_cast<std::size_t>(i)].segment<3>(3 * v) += f * diff;
          cot[static_cast<std::size_t>(j)].segment<3>(3 * v) -= f * diff;
        }
      }
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    auto & g = (*gradients)[static_cast<std::size_t>(j)];
    g = decoder_pullback(model, latents[static_cast<std::size_t>(j)], cot[static_cast<std::size_t>(j)]);
    if (hyper.lambda_dpp != 0.0 && !hyper.disable_quality) {
      g += hyper.lambda_dpp * dq[j] * quality_gradient(latents[static_cast<std::size_t>(j)]);
    }
  }
  return terms;
}

CompletionSet optimize_completions(
  const LatentModel & model, const Mesh & partial, const VertexMask & occlusion, const DiversifyHyper & hyper)
{
  hyper.validate();
  require(3 * static_cast<Eigen::Index>(partial.num_vertices()) == model.mean.size(),
    "optimize_completions: partial mesh does not match the latent model");
  require(occlusion.size() == partial.num_vertices(), "optimize_completions: occlusion mask size mismatch");
  require(occlusion.count() > 0, "optimize_completions: empty occlusion mask");

  const Posterior post = encode(model, partial, occlusion);
  CompletionSet out;
  out.occlusion = occlusion;
  out.initial_latents = sample_latents(post.mu, post.sigma, hyper.num_samples, derive_seed(hyper.seed, "posterior"));
  out.latents = out.initial_latents;
  if (hyper.k > 0.0) {
    out.k = hyper.k;
  } else {
    std::vector<Eigen::VectorXd> shapes;
    for (const auto & z : out.latents) {
      shapes.push_back(decode_flat(model, z));
    }
    out.k = auto_similarity_scale(shapes, occlusion);
  }

  std::vector<Eigen::VectorXd> grads;
  for (int it = 0; it <= hyper.n_comp; ++it) {
    const bool step = it < hyper.n_comp;
    const DiversityTerms terms =
      diversity_loss(model, out.latents, partial, occlusion, hyper, out.k, step ? &grads : nullptr);
    if (!std::isfinite(terms.total)) {
      throw NumericError("diversification diverged at iteration " + std::to_string(it));
    }
    out.trace.push_back(terms);
    if (step) {
      for (std::size_t j = 0; j < out.latents.size(); ++j) {
        if (!grads[j].allFinite()) {
          throw NumericError("diversification produced a non-finite gradient at iteration " + std::to_string(it));
        }
        out.latents[j] -= hyper.eta * grads[j];
      }
    }
  }
  for (const auto & z : out.latents) {
    out.completions.push_back(decode(model, z));
  }
  return out;
}

CompletionSet optimize_completions(
  const LatentModel & model, const FitResult & fit, const VertexMask & occlusion, const DiversifyHyper & hyper)
{
  return optimize_completions(model, fit.partial, occlusion, hyper);
}

std::vector<Mesh> interpolate(
  const LatentModel & model, const Eigen::VectorXd & z1, const Eigen::VectorXd & z2, int steps)
{
  require(steps >= 2, "interpolate: steps must be >= 2");
  require(z1.size() == model.latent_dim() && z2.size() == model.latent_dim(), "interpolate: latent dimension mismatch");
  std::vector<Mesh> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double alpha = 1.0 - static_cast<double>(i) / static_cast<double>(steps - 1);
    out.push_back(decode(model, alpha * z1 + (1.0 - alpha) * z2));
  }
  return out;
}

}  // namespace divface
