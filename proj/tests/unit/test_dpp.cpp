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
#include "divface/synthetic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace divface;
using divface::testing::random_vector;

namespace
{

Eigen::MatrixXd random_psd(int m, std::mt19937_64 & rng)
{
  std::uniform_int_distribution<int> rank_dist(1, m);
  const int r = rank_dist(rng);
  Eigen::MatrixXd a(m, r);
  for (int c = 0; c < r; ++c) {
    a.col(c) = random_vector(m, rng);
  }
  return a * a.transpose() / r;
}

}  // namespace

TEST_CASE("similarity examples")
{
  const Mesh a = make_template(1);
  const VertexMask all(a.num_vertices(), true);
  CHECK(similarity(a, a, all, 2.0) == 1.0);

  Eigen::VectorXd f = a.flat();
  f[0] += 0.6;
  f[1] += 0.8;
  CHECK(similarity(a, a.with_flat(f), all, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(std::exp(-1.0) == doctest::Approx(0.367879).epsilon(1e-6));

  double last = 1.0;
  for (double step : {0.1, 0.2, 0.4, 0.8}) {
    Eigen::VectorXd g = a.flat();
    g[2] += step;
    const double s = similarity(a, a.with_flat(g), all, 1.0);
    CHECK(s < last);
    last = s;
  }
  VertexMask none(a.num_vertices());
  CHECK_THROWS_AS(similarity(a, a, none, 1.0), InputError);
  CHECK_THROWS_AS(similarity(a, a, all, 0.0), InputError);
  // only the masked coordinates count
  VertexMask v1(a.num_vertices());
  v1.set(1, true);
  CHECK(similarity(a, a.with_flat(f), v1, 1.0) == 1.0);
}

TEST_CASE("quality hinge")
{
  CHECK(quality(Eigen::VectorXd::Zero(5)) == 1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
  z[0] = std::sqrt(6.0);
  CHECK(quality(z) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(quality(Eigen::VectorXd::Constant(4, 2.0)) == doctest::Approx(std::exp(-10.0)).epsilon(1e-14));
  CHECK(std::exp(-10.0) == doctest::Approx(4.5400e-5).epsilon(1e-4));

  double last = 1.0;
  for (double r : {2.5, 3.0, 3.5, 4.0}) {
    const double q = quality(Eigen::VectorXd::Constant(4, r / 2.0));
    CHECK(q < last);
    last = q;
  }
  CHECK(quality_gradient(Eigen::VectorXd::Constant(4, 0.5)).norm() == 0.0);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd w = random_vector(6, rng, 1.5);
    if (w.squaredNorm() <= 3.0 * std::sqrt(6.0) + 1e-3) {
      continue;
    }
    const Eigen::VectorXd g = quality_gradient(w);
    CHECK((g + 2.0 * quality(w) * w).norm() < 1e-15);
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd a = w;
      Eigen::VectorXd b = w;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      CHECK(g[i] == doctest::Approx((quality(a) - quality(b)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("kernel construction examples")
{
  const Mesh a = make_template(1);
  const VertexMask all(a.num_vertices(), true);
  const std::vector<Eigen::VectorXd> zeros(2, Eigen::VectorXd::Zero(3));
  const DppKernel dup = build_kernel(std::vector<Mesh>{a, a}, zeros, all, 1.0);
  CHECK(dup.L == Eigen::Matrix2d::Ones());
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dup.L).eigenvalues().minCoeff() == doctest::Approx(0.0));
  CHECK(brute_force_expected_cardinality(dup.L) < 2.0);

  Eigen::VectorXd far = a.flat();
  far.array() += 1e3;
  const DppKernel apart = build_kernel(std::vector<Mesh>{a, a.with_flat(far)}, zeros, all, 1.0);
  CHECK((apart.L - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-300);

  CHECK_THROWS_AS(build_kernel(std::vector<Mesh>{a}, {zeros[0]}, all, 1.0), InputError);
  CHECK_THROWS_AS(build_kernel(std::vector<Mesh>{a, a}, {zeros[0]}, all, 1.0), InputError);
}

TEST_CASE("kernels are PSD with valid factors")
{
  std::mt19937_64 rng(2);
  const Mesh t = make_template(1);
  const VertexMask occ = grow_occlusion(t, 0.3, 1);
  std::uniform_int_distribution<int> msize(2, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = msize(rng);
    std::vector<Eigen::VectorXd> shapes;
    std::vector<Eigen::VectorXd> latents;
    for (int j = 0; j < m; ++j) {
      shapes.push_back(t.flat() + random_vector(t.flat().size(), rng, 0.05));
      latents.push_back(random_vector(4, rng, 1.2));
    }
    const DppKernel k = build_kernel(shapes, latents, occ, 3.0);
    CHECK_NOTHROW(k.validate());
    CHECK((k.L - k.L.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((k.S.diagonal().array() == 1.0).all());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k.L).eigenvalues().minCoeff() >= -1e-9);
  }
}

TEST_CASE("expected cardinality examples")
{
  CHECK(expected_cardinality_loss(Eigen::Matrix2d::Zero()) == 0.0);
  CHECK(expected_cardinality_loss(Eigen::Matrix2d::Identity()) == doctest::Approx(-1.0).epsilon(1e-15));
  Eigen::Matrix2d l;
  l << 2, 1, 1, 2;
  CHECK(expected_cardinality_loss(l) == doctest::Approx(-1.25).epsilon(1e-15));
  CHECK(brute_force_expected_cardinality(l) == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(brute_force_expected_cardinality(Eigen::Matrix3d::Identity()) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(brute_force_expected_cardinality(Eigen::MatrixXd::Identity(11, 11)), InputError);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0.2, 1;
  CHECK_THROWS_AS(expected_cardinality_loss(asym), InputError);
}

TEST_CASE("expected cardinality agrees with subset enumeration")
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + trial % 8;
    const Eigen::MatrixXd l = random_psd(m, rng);
    const double value = -expected_cardinality_loss(l);
    CHECK(std::abs(value - brute_force_expected_cardinality(l)) < 1e-9);
    CHECK(value >= 0.0);
    CHECK(value <= m);
  }
}

TEST_CASE("kernel gradient")
{
  CHECK(loss_gradient_wrt_kernel(Eigen::MatrixXd::Zero(4, 4)) == -Eigen::MatrixXd::Identity(4, 4));
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 6;
    const Eigen::MatrixXd l = random_psd(m, rng);
    const Eigen::MatrixXd g = loss_gradient_wrt_kernel(l);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::MatrixXd fd(m, m);
    const double h = 1e-6;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, m);
        e(i, j) += 1.0;
        e(j, i) += 1.0;
        const double df = (expected_cardinality_loss(l + h * e) - expected_cardinality_loss(l - h * e)) / (2 * h);
        // a symmetric perturbation moves both (i, j) and (j, i)
        fd(i, j) = i == j ? df / 2.0 : df / 2.0;
      }
    }
    CHECK((g - fd).norm() / fd.norm() < 1e-7);
  }
}

TEST_CASE("moving two completions apart never raises the loss")
{
  const Mesh t = make_template(1);
  const VertexMask all(t.num_vertices(), true);
  const std::vector<Eigen::VectorXd> zeros(2, Eigen::VectorXd::Zero(3));
  double last = 0.0;
  for (double sep = 0.0; sep <= 2.0; sep += 0.1) {
    Eigen::VectorXd moved = t.flat();
    moved.array() += sep;
    const double loss =
      expected_cardinality_loss(build_kernel(std::vector<Eigen::VectorXd>{t.flat(), moved}, zeros, all, 1.0).L);
    CHECK(loss <= last + 1e-15);
    last = loss;
  }
}
