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
#include "divface/metrics.hpp"
#include "divface/synthetic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <limits>

using namespace divface;
using divface::testing::random_vector;
using divface::testing::world;

namespace
{

/// 16-dimensional linear model on a richer generator.
const LatentModel & latent16()
{
  static const LatentModel m = [] {
    const auto gen = make_generator(make_template(2), 10, 10, 71);
    std::vector<Mesh> meshes;
    for (const auto & s : sample_dataset(gen, 80, 0.1, 72)) {
      meshes.push_back(s.mesh);
    }
    return train_linear(meshes, 16);
  }();
  return m;
}

double fd_error(const LatentModel & model, const std::vector<Eigen::VectorXd> & latents, const Mesh & partial,
  const VertexMask & occ, const DiversifyHyper & hyper, double k)
{
  std::vector<Eigen::VectorXd> grads;
  diversity_loss(model, latents, partial, occ, hyper, k, &grads);
  double num = 0.0;
  double den = 0.0;
  const double h = 1e-6;
  for (std::size_t j = 0; j < latents.size(); ++j) {
    for (Eigen::Index i = 0; i < latents[j].size(); ++i) {
      auto up = latents;
      auto down = latents;
      up[j][i] += h;
      down[j][i] -= h;
      const double fd = (diversity_loss(model, up, partial, occ, hyper, k).total -
                          diversity_loss(model, down, partial, occ, hyper, k).total) /
                        (2 * h);
      num += (grads[j][i] - fd) * (grads[j][i] - fd);
      den += fd * fd;
    }
  }
  return std::sqrt(num / den);
}

std::vector<Mesh> decode_all(const LatentModel & m, const std::vector<Eigen::VectorXd> & zs)
{
  std::vector<Mesh> out;
  for (const auto & z : zs) {
    out.push_back(decode(m, z));
  }
  return out;
}

double mean_visible_error(const std::vector<Mesh> & set, const Mesh & partial, const VertexMask & occ)
{
  double s = 0.0;
  for (const auto & c : set) {
    s += masked_mean_l2(c, partial, occ.complement());
  }
  return s / static_cast<double>(set.size());
}

struct Scenario
{
  Mesh partial;
  VertexMask occ;
};

Scenario scenario(int i)
{
  const auto & w = world();
  const Mesh gt = w.test[static_cast<std::size_t>(i)].mesh;
  const VertexMask occ = grow_occlusion(gt, 0.3, static_cast<std::uint64_t>(100 + i));
  const std::size_t n = gt.num_vertices();
  FitHyper fh;
  fh.n_iter = 200;
  const FitResult fit = fit_partial(w.model, Observation::dense(gt, VertexMask(n, true), occ), fh);
  return {fit.partial, occ};
}

}  // namespace

TEST_CASE("pure fidelity minimum")
{
  const LatentModel & m = world().latent;
  std::mt19937_64 rng(1);
  const Eigen::VectorXd z = random_vector(m.latent_dim(), rng, 0.3);
  const Mesh partial = decode(m, z);
  DiversifyHyper h;
  h.lambda_dpp = 0.0;
  const VertexMask occ = grow_occlusion(partial, 0.3, 2);
  const DiversityTerms t = diversity_loss(m, {z, z, z}, partial, occ, h, 1.0);
  CHECK(t.total == 0.0);
  CHECK(t.fidelity == 0.0);
}

TEST_CASE("diversity loss gradient matches finite differences")
{
  const LatentModel & lin = latent16();
  const LatentModel mlp = init_vae(std::vector<Mesh>{lin.templ.with_flat(lin.mean)}, 16, 3);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const LatentModel & m = t < 7 ? lin : mlp;
    const double sd = t % 2 ? 2.0 * std::sqrt(m.prior_var) : std::sqrt(m.prior_var);
    std::vector<Eigen::VectorXd> zs;
    for (int j = 0; j < 4; ++j) {
      zs.push_back(random_vector(16, rng, sd));
    }
    const Mesh partial = decode(m, random_vector(16, rng, 0.5));
    const VertexMask occ = grow_occlusion(partial, 0.3, static_cast<std::uint64_t>(t));
    DiversifyHyper h;
    h.num_samples = 4;
    h.disable_quality = t == 3;
    const double k = 1.0 / (0.5 + t);
    CHECK(fd_error(m, zs, partial, occ, h, k) < 1e-4);
  }
}

TEST_CASE("splitting collapsed samples lowers the DPP loss")
{
  const LatentModel & m = world().latent;
  const Mesh partial = decode(m, Eigen::VectorXd::Zero(m.latent_dim()));
  const VertexMask occ = grow_occlusion(partial, 0.3, 4);
  DiversifyHyper h;
  h.lambda_s = 0.0;
  std::mt19937_64 rng(3);
  const Eigen::VectorXd z = random_vector(m.latent_dim(), rng, 0.2);
  const double collapsed = diversity_loss(m, {z, z}, partial, occ, h, 1.0).total;
  const double lone = expected_cardinality_loss(Eigen::Matrix2d::Constant(quality(z) * quality(z)));
  CHECK(collapsed == doctest::Approx(lone).epsilon(1e-12));
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd z2 = z + random_vector(m.latent_dim(), rng, 0.05);
    CHECK(diversity_loss(m, {z, z2}, partial, occ, h, 1.0).total < collapsed);
  }
}

TEST_CASE("optimize_completions contracts")
{
  const LatentModel & m = world().latent;
  const Scenario s = scenario(0);
  DiversifyHyper h;
  h.num_samples = 6;
  h.n_comp = 100;
  h.seed = 5;
  const CompletionSet a = optimize_completions(m, s.partial, s.occ, h);
  CHECK(a.completions.size() == 6);
  CHECK(a.latents.size() == 6);
  CHECK(a.trace.size() == 101);
  CHECK(a.occlusion == s.occ);
  CHECK(a.k > 0.0);
  for (const auto & c : a.completions) {
    CHECK(c.faces() == m.templ.faces());
  }
  const CompletionSet b = optimize_completions(m, s.partial, s.occ, h);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(a.latents[j] == b.latents[j]);
  }
  h.num_samples = 1;
  CHECK_THROWS_AS(optimize_completions(m, s.partial, s.occ, h), InputError);
  h.num_samples = 4;
  Vertices bad = s.partial.vertices();
  bad(s.occ.complement().indices().front(), 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(optimize_completions(m, s.partial.with_vertices(bad), s.occ, h), NumericError);
}

TEST_CASE("fidelity-only ablation does not amplify diversity")
{
  const LatentModel & m = world().latent;
  for (int i = 0; i < 3; ++i) {
    const Scenario s = scenario(i);
    DiversifyHyper h;
    h.lambda_dpp = 0.0;
    h.seed = static_cast<std::uint64_t>(i);
    const CompletionSet set = optimize_completions(m, s.partial, s.occ, h);
    const auto raw = decode_all(m, set.initial_latents);
    CHECK(asd(set.completions, s.occ) <= 1.5 * asd(raw, s.occ));
    CHECK(mean_visible_error(set.completions, s.partial, s.occ) < mean_visible_error(raw, s.partial, s.occ));
  }
}

TEST_CASE("default diversification: gain, fidelity, locality, containment")
{
  const LatentModel & m = world().latent;
  for (int i = 0; i < 4; ++i) {
    const Scenario s = scenario(i);
    DiversifyHyper h;
    h.seed = static_cast<std::uint64_t>(10 + i);
    const CompletionSet set = optimize_completions(m, s.partial, s.occ, h);
    const auto raw = decode_all(m, set.initial_latents);
    const VertexMask vis = s.occ.complement();
    const double gain = asd(set.completions, s.occ) / asd(raw, s.occ);
    MESSAGE("instance " << i << " ASD-O gain " << gain);
    CHECK(gain >= 1.5);
    CHECK(mean_visible_error(set.completions, s.partial, s.occ) <= 1.25 * mean_visible_error(raw, s.partial, s.occ));
    CHECK(asd(set.completions, s.occ) / asd(set.completions, vis) > asd(raw, s.occ) / asd(raw, vis));

    DiversifyHyper no_q = h;
    no_q.disable_quality = true;
    const CompletionSet ablated = optimize_completions(m, s.partial, s.occ, no_q);
    double with_q = 0.0;
    double without_q = 0.0;
    for (std::size_t j = 0; j < set.latents.size(); ++j) {
      with_q += set.latents[j].squaredNorm();
      without_q += ablated.latents[j].squaredNorm();
    }
    CHECK(with_q <= without_q);
  }
}

TEST_CASE("auto similarity scale")
{
  const Mesh t = make_template(1);
  const VertexMask all(t.num_vertices(), true);
  Eigen::VectorXd b = t.flat();
  b[0] += 3.0;
  Eigen::VectorXd c = t.flat();
  c[0] += 1.0;
  // distances 3, 1, 2 -> median 2
  CHECK(auto_similarity_scale({t.flat(), b, c}, all) == doctest::Approx(0.5));
  CHECK(auto_similarity_scale({t.flat(), t.flat()}, all) == 1.0);
}

TEST_CASE("latent interpolation")
{
  const LatentModel & m = world().latent;
  std::mt19937_64 rng(6);
  const Eigen::VectorXd z1 = random_vector(m.latent_dim(), rng);
  const Eigen::VectorXd z2 = random_vector(m.latent_dim(), rng);
  const auto ends = interpolate(m, z1, z2, 2);
  REQUIRE(ends.size() == 2);
  CHECK(ends[0].vertices() == decode(m, z1).vertices());
  CHECK(ends[1].vertices() == decode(m, z2).vertices());
  const auto same = interpolate(m, z1, z1, 5);
  for (const auto & x : same) {
    CHECK((x.vertices() - same[0].vertices()).cwiseAbs().maxCoeff() < 1e-15);
  }
  const auto three = interpolate(m, z1, z2, 3);
  const Eigen::VectorXd avg = 0.5 * (three[0].flat() + three[2].flat());
  CHECK((three[1].flat() - avg).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(interpolate(m, z1, z2, 1), InputError);
  CHECK_THROWS_AS(interpolate(m, z1, Eigen::VectorXd::Zero(2), 3), InputError);
}
