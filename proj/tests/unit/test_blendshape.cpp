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

#include "divface/blendshape.hpp"
#include "divface/error.hpp"
#include "divface/synthetic.hpp"
#include "divface/tensor_io.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <fstream>
#include <sstream>

using namespace divface;
using divface::testing::TempDir;
using divface::testing::world;

namespace
{

double max_orthonormality_error(const Eigen::MatrixXd & b)
{
  return (b.transpose() * b - Eigen::MatrixXd::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff();
}

/// Largest principal angle between two column spans (orthonormal inputs).
double max_principal_angle(const Eigen::MatrixXd & a, const Eigen::MatrixXd & b)
{
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  const double smallest = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, smallest));
}

std::string bytes_of(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("global bases are orthonormal with descending eigenvalues")
{
  const auto & g = world().model.global;
  CHECK(max_orthonormality_error(g.shape_basis) < 1e-10);
  CHECK(max_orthonormality_error(g.expr_basis) < 1e-10);
  for (const Eigen::VectorXd * ev : {&g.shape_eigenvalues, &g.expr_eigenvalues}) {
    CHECK(ev->minCoeff() >= 0.0);
    for (Eigen::Index i = 1; i < ev->size(); ++i) {
      CHECK((*ev)[i] <= (*ev)[i - 1]);
    }
  }
}

TEST_CASE("global PCA recovers the generator subspaces")
{
  const auto gen = make_generator(make_template(2), 4, 3, 21);
  const auto corpus = sample_subjects(gen, 10, 4, 0.1, 22);
  const TrainingCorpus tc{corpus.meshes(), corpus.subject, corpus.neutral_index};
  const GlobalModel g = train_global(tc, 4, 3);
  CHECK(max_principal_angle(g.shape_basis, gen.shape_fields) < 1e-6);
  CHECK(max_principal_angle(g.expr_basis, gen.expr_fields) < 1e-6);
}

TEST_CASE("global PCA on identical meshes")
{
  const Mesh t = make_template(1);
  const TrainingCorpus tc{std::vector<Mesh>(6, t), {0, 0, 1, 1, 2, 2}, {0, 2, 4}};
  CHECK_THROWS_AS(train_global(tc, 1, 1), InputError);
  const GlobalModel g = train_global(tc, 0, 0);
  CHECK(g.n_shape() == 0);
  CHECK(g.templ.vertices() == t.vertices());

  const PcaBasis p = principal_components(Eigen::MatrixXd::Ones(9, 5), 2, true, true);
  CHECK(p.eigenvalues.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("global PCA needs more subjects than identity components")
{
  const auto & w = world();
  TrainingCorpus tc = w.training;
  CHECK_THROWS_AS(train_global(tc, 12, 2), InputError);
}

TEST_CASE("fit_global_params examples")
{
  const auto & g = world().model.global;
  const GlobalCoefficients zero = fit_global_params(g, g.templ);
  CHECK(zero.shape.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(zero.expr.cwiseAbs().maxCoeff() < 1e-12);

  const Mesh two = g.templ.with_flat(g.templ.flat() + 2.0 * g.shape_basis.col(0));
  const GlobalCoefficients c = fit_global_params(g, two);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(g.n_shape());
  expected[0] = 2.0;
  CHECK((c.shape - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(c.expr.cwiseAbs().maxCoeff() < 1e-10);

  std::mt19937_64 rng(4);
  const Mesh off = g.templ.with_flat(g.templ.flat() + divface::testing::random_vector(g.shape_basis.rows(), rng, 0.1));
  const GlobalCoefficients f = fit_global_params(g, off);
  const Eigen::VectorXd res = off.flat() - coarse_flat(g, f.shape, f.expr, g.n_shape(), g.n_expr());
  CHECK((g.shape_basis.transpose() * res).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((g.expr_basis.transpose() * res).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(fit_global_params(g, make_template(1)), InputError);
}

TEST_CASE("coarse reconstruction truncates")
{
  const auto & m = world().model;
  const auto & g = m.global;
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(g.n_shape(), 0.1, 0.4);
  const Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(g.n_expr(), -0.2, 0.2);
  CHECK(coarse_reconstruct(m, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)).vertices() == g.templ.vertices());

  BlendshapeModel none = m;
  none.coarse = {0, 0};
  CHECK(coarse_reconstruct(none, b, p).vertices() == g.templ.vertices());

  BlendshapeModel full = m;
  full.coarse = {g.n_shape(), g.n_expr()};
  const Eigen::VectorXd expect = g.templ.flat() + g.shape_basis * b + g.expr_basis * p;
  CHECK((coarse_reconstruct(full, b, p).flat() - expect).cwiseAbs().maxCoeff() < 1e-14);

  const Eigen::VectorXd trunc = g.templ.flat() + g.shape_basis.leftCols(2) * b.head(2) + g.expr_basis.leftCols(2) * p.head(2);
  CHECK((coarse_reconstruct(m, b, p).flat() - trunc).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(coarse_reconstruct(m, Eigen::VectorXd::Zero(1), p), InputError);
}

TEST_CASE("local bases: support, orthonormality, residual orthogonality")
{
  const auto & w = world();
  const auto & m = w.model;
  REQUIRE(m.num_regions() == 14);
  for (std::size_t r = 0; r < m.num_regions(); ++r) {
    const Eigen::VectorXd outside = m.local.atlas[r].mask.complement().coordinate_weights();
    for (const Eigen::MatrixXd * b : {&m.local.shape[r], &m.local.expr[r]}) {
      CHECK(b->cols() == 3);
      CHECK(max_orthonormality_error(*b) < 1e-10);
      CHECK((outside.asDiagonal() * *b).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  const auto & g = m.global;
  for (const Mesh & sample : w.training.meshes) {
    const GlobalCoefficients c = fit_global_params(g, sample);
    const Eigen::VectorXd shape_res = sample.flat() - coarse_flat(g, c.shape, c.expr, m.coarse.shape, g.n_expr());
    const Eigen::VectorXd expr_res = sample.flat() - coarse_flat(g, c.shape, c.expr, g.n_shape(), m.coarse.expr);
    CHECK((g.shape_basis.leftCols(m.coarse.shape).transpose() * shape_res).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((g.expr_basis.leftCols(m.coarse.expr).transpose() * expr_res).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("local models on in-span data carry no variance")
{
  const auto gen = make_generator(make_template(2), 3, 3, 31);
  const auto corpus = sample_subjects(gen, 8, 3, 0.1, 32);
  const TrainingCorpus tc{corpus.meshes(), corpus.subject, corpus.neutral_index};
  const GlobalModel g = train_global(tc, 3, 3);
  const LocalModels local = train_local(g, tc.meshes, make_region_atlas(g.templ), {3, 3}, {2, 2});
  for (std::size_t r = 0; r < local.shape.size(); ++r) {
    CHECK(local.shape_eigenvalues[r].maxCoeff() < 1e-10);
    CHECK(local.expr_eigenvalues[r].maxCoeff() < 1e-10);
  }
}

TEST_CASE("an injected localized mode dominates its region")
{
  const Mesh t = make_template(2);
  const auto gen = make_generator(t, 3, 3, 41);
  const RegionAtlas atlas = make_region_atlas(t);
  const std::size_t target_region = 5;
  const auto idx = atlas[target_region].mask.indices();
  const Eigen::Vector3d centre = t.vertices().row(idx.front()).transpose();
  Eigen::VectorXd bump = Eigen::VectorXd::Zero(3 * static_cast<Eigen::Index>(t.num_vertices()));
  for (int v : idx) {
    const Eigen::Vector3d p = t.vertices().row(v).transpose();
    bump.segment<3>(3 * v) = p * std::exp(-(p - centre).squaredNorm() / 0.1);
  }
  bump.normalize();

  auto corpus = sample_subjects(gen, 16, 3, 0.1, 42);
  std::mt19937_64 rng(43);
  std::normal_distribution<double> normal(0.0, 0.05);
  std::vector<Mesh> meshes;
  for (auto & s : corpus.samples) {
    meshes.push_back(s.mesh.with_flat(s.mesh.flat() + normal(rng) * bump));
  }
  const TrainingCorpus tc{meshes, corpus.subject, corpus.neutral_index};
  const GlobalModel g = train_global(tc, 3, 3);
  const LocalModels local = train_local(g, meshes, atlas, {3, 3}, {2, 2});
  const Eigen::VectorXd & ev = local.expr_eigenvalues[target_region];
  CHECK(ev[0] > 10.0 * ev[1]);
}

TEST_CASE("evaluate: template, locality, linearity, round trip")
{
  const auto & m = world().model;
  ModelParams zero = ModelParams::zeros(m);
  CHECK(evaluate(m, zero).vertices() == m.global.templ.vertices());

  std::mt19937_64 rng(9);
  const std::size_t r = 3;
  ModelParams local = zero;
  local.region_shape[r] = divface::testing::random_vector(3, rng);
  local.region_expr[r] = divface::testing::random_vector(3, rng);
  const Eigen::VectorXd diff = evaluate(m, local).flat() - m.global.templ.flat();
  const Eigen::VectorXd outside = m.local.atlas[r].mask.complement().coordinate_weights();
  CHECK(diff.cwiseProduct(outside).cwiseAbs().maxCoeff() == 0.0);
  CHECK(diff.cwiseAbs().maxCoeff() > 0.0);

  auto random_params = [&] {
    ModelParams p = zero;
    p.shape = divface::testing::random_vector(2, rng);
    p.expr = divface::testing::random_vector(2, rng);
    for (std::size_t k = 0; k < m.num_regions(); ++k) {
      p.region_shape[k] = divface::testing::random_vector(3, rng);
      p.region_expr[k] = divface::testing::random_vector(3, rng);
    }
    return p;
  };
  const ModelParams a = random_params();
  const ModelParams b = random_params();
  ModelParams sum = a;
  sum.shape += b.shape;
  sum.expr += b.expr;
  for (std::size_t k = 0; k < m.num_regions(); ++k) {
    sum.region_shape[k] += b.region_shape[k];
    sum.region_expr[k] += b.region_expr[k];
  }
  const Eigen::VectorXd t = m.global.templ.flat();
  const Eigen::VectorXd lhs = evaluate(m, sum).flat() - t;
  const Eigen::VectorXd rhs = (evaluate(m, a).flat() - t) + (evaluate(m, b).flat() - t);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);

  ModelParams coarse_only = zero;
  coarse_only.shape = a.shape;
  coarse_only.expr = a.expr;
  const GlobalCoefficients rec = fit_global_params(m.global, evaluate(m, coarse_only));
  CHECK((rec.shape.head(2) - a.shape).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((rec.expr.head(2) - a.expr).cwiseAbs().maxCoeff() < 1e-8);

  ModelParams bad = zero;
  bad.shape = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(evaluate(m, bad), InputError);
  bad = zero;
  bad.region_expr[0] = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(evaluate(m, bad), InputError);
}

TEST_CASE("model file round trip is bitwise")
{
  TempDir dir("model");
  const auto & m = world().model;
  save_model(m, dir / "a.dsc");
  const BlendshapeModel back = load_model(dir / "a.dsc");
  CHECK(back.global.shape_basis == m.global.shape_basis);
  CHECK(back.global.expr_basis == m.global.expr_basis);
  CHECK(back.global.shape_eigenvalues == m.global.shape_eigenvalues);
  CHECK(back.global.templ.vertices() == m.global.templ.vertices());
  CHECK(back.global.templ.faces() == m.global.templ.faces());
  CHECK(back.coarse.shape == m.coarse.shape);
  for (std::size_t r = 0; r < m.num_regions(); ++r) {
    CHECK(back.local.shape[r] == m.local.shape[r]);
    CHECK(back.local.expr[r] == m.local.expr[r]);
    CHECK(back.local.atlas[r].mask == m.local.atlas[r].mask);
  }
  save_model(back, dir / "b.dsc");
  CHECK(bytes_of(dir / "a.dsc") == bytes_of(dir / "b.dsc"));

  const TensorArchive archive = TensorArchive::load(dir / "a.dsc");
  for (const char * name : {"template", "shape_basis", "expr_basis", "shape_eig", "expr_eig", "region_00_mask",
         "region_13_shape", "region_13_expr"}) {
    CHECK(archive.contains(name));
  }
}

TEST_CASE("model file format errors")
{
  TempDir dir("model");
  save_model(world().model, dir / "a.dsc");
  std::string bytes = bytes_of(dir / "a.dsc");
  CHECK(bytes.substr(0, 4) == "DSC1");

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::ofstream(dir / "magic.dsc", std::ios::binary) << bad_magic;
  CHECK_THROWS_AS(load_model(dir / "magic.dsc"), InputError);

  std::string v2 = bytes;
  v2[4] = 2;
  std::ofstream(dir / "v2.dsc", std::ios::binary) << v2;
  try {
    load_model(dir / "v2.dsc");
    FAIL("expected a version error");
  } catch (const InputError & e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  std::ofstream(dir / "short.dsc", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_model(dir / "short.dsc"), InputError);
  CHECK_THROWS_AS(load_model(dir / "none.dsc"), InputError);
}

TEST_CASE("tensor archive serialisation layout")
{
  TensorArchive a;
  a.put_scalar("s", 1.5);
  const std::string bytes = a.serialize();
  // magic, version, count, u16 len, "s", dtype, rank 0, one f64
  CHECK(bytes.size() == 4 + 4 + 4 + 2 + 1 + 1 + 1 + 8);
  CHECK(TensorArchive::deserialize(bytes).scalar("s") == 1.5);
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  a.put_matrix("m", m);
  const TensorArchive b = TensorArchive::deserialize(a.serialize());
  CHECK(b.get("m").data == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(b.matrix("m") == m);
  CHECK_THROWS_AS(b.get("nope"), InputError);
}
