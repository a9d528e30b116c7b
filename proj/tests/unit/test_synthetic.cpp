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

#include "divface/error.hpp"
#include "divface/synthetic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <queue>
#include <set>

using namespace divface;

namespace
{

bool connected(const Mesh & mesh, const VertexMask & mask)
{
  const auto adj = vertex_adjacency(mesh);
  const auto idx = mask.indices();
  if (idx.empty()) {
    return true;
  }
  std::vector<char> seen(mesh.num_vertices(), 0);
  std::queue<int> queue;
  queue.push(idx.front());
  seen[static_cast<std::size_t>(idx.front())] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (int n : adj[static_cast<std::size_t>(v)]) {
      if (mask[static_cast<std::size_t>(n)] && !seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = 1;
        ++reached;
        queue.push(n);
      }
    }
  }
  return reached == idx.size();
}

}  // namespace

TEST_CASE("icosphere sizes and radius")
{
  const Mesh ico = make_template(0);
  CHECK(ico.num_vertices() == 12);
  CHECK(ico.num_faces() == 20);
  for (int k = 0; k <= 4; ++k) {
    const Mesh m = make_template(k);
    CHECK(m.num_vertices() == static_cast<std::size_t>(10 * (1 << (2 * k)) + 2));
    CHECK(m.num_faces() == static_cast<std::size_t>(20 * (1 << (2 * k))));
    CHECK((m.vertices().rowwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  CHECK(make_template(3).num_vertices() == 642);
  CHECK_THROWS_AS(make_template(-1), InputError);
  CHECK_THROWS_AS(make_template(6), InputError);
}

TEST_CASE("generator is deterministic and orthonormal")
{
  const Mesh t = make_template(2);
  const auto a = make_generator(t, 5, 4, 99);
  const auto b = make_generator(t, 5, 4, 99);
  CHECK(a.shape_fields == b.shape_fields);
  CHECK(a.expr_fields == b.expr_fields);
  Eigen::MatrixXd all(a.shape_fields.rows(), 9);
  all << a.shape_fields, a.expr_fields;
  CHECK((all.transpose() * all - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(make_generator(t, 5, 4, 100).shape_fields != a.shape_fields);

  const Mesh ico = make_template(0);
  CHECK_THROWS_AS(make_generator(ico, 8, 5, 1), InputError);
  CHECK_THROWS_AS(make_generator(ico, 0, 5, 1), InputError);
}

TEST_CASE("dataset samples lie in the generator span")
{
  const auto & w = divface::testing::world();
  CHECK(sample_dataset(w.gen, 3, 0.0, 5)[2].mesh.vertices() == w.gen.templ.vertices());

  const auto samples = sample_dataset(w.gen, 8, 0.2, 5);
  for (const auto & s : samples) {
    const Eigen::VectorXd d = s.mesh.flat() - w.gen.templ.flat();
    CHECK((w.gen.shape_fields.transpose() * d - s.shape).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((w.gen.expr_fields.transpose() * d - s.expr).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::VectorXd rest = d - w.gen.shape_fields * s.shape - w.gen.expr_fields * s.expr;
    CHECK(rest.cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto other = sample_dataset(w.gen, 8, 0.2, 6);
  CHECK(other[0].shape != samples[0].shape);
  const auto again = sample_dataset(w.gen, 8, 0.2, 5);
  CHECK(again[7].mesh.vertices() == samples[7].mesh.vertices());
}

TEST_CASE("subject corpus structure")
{
  const auto & w = divface::testing::world();
  const auto & c = w.corpus;
  CHECK(c.samples.size() == 12 * 4);
  CHECK(c.neutral_index.size() == 12);
  for (std::size_t s = 0; s < c.neutral_index.size(); ++s) {
    const auto & neutral = c.samples[static_cast<std::size_t>(c.neutral_index[s])];
    CHECK(neutral.expr.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.subject[static_cast<std::size_t>(c.neutral_index[s])] == static_cast<int>(s));
  }
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const auto & neutral = c.samples[static_cast<std::size_t>(c.neutral_index[static_cast<std::size_t>(c.subject[i])])];
    CHECK(c.samples[i].shape == neutral.shape);
  }
}

TEST_CASE("spectrum decay scales coefficient spread")
{
  const Mesh t = make_template(2);
  GeneratorOptions opts;
  opts.spectrum_decay = 0.5;
  const auto gen = make_generator(t, 4, 4, 3, opts);
  const auto samples = sample_dataset(gen, 4000, 1.0, 8);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(4);
  for (const auto & s : samples) {
    var += s.shape.cwiseAbs2();
  }
  var /= 4000.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::sqrt(var[i]) == doctest::Approx(std::pow(0.5, i)).epsilon(0.05));
  }
  opts.spectrum_decay = 0.0;
  CHECK_THROWS_AS(make_generator(t, 4, 4, 3, opts), InputError);
}

TEST_CASE("region atlas partitions the sphere into 14 connected regions")
{
  for (int k : {1, 2, 3}) {
    const Mesh t = make_template(k);
    const RegionAtlas atlas = make_region_atlas(t);
    REQUIRE(atlas.size() == 14);
    std::vector<int> cover(t.num_vertices(), 0);
    std::set<std::string> names;
    for (const auto & r : atlas.regions()) {
      CHECK(r.mask.count() > 0);
      CHECK(connected(t, r.mask));
      names.insert(r.name);
      for (int v : r.mask.indices()) {
        ++cover[static_cast<std::size_t>(v)];
      }
    }
    CHECK(names.size() == 14);
    CHECK(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));
  }
  CHECK_THROWS_AS(RegionAtlas(std::vector<Region>(3)), InputError);
}

TEST_CASE("landmark vertices are 68 distinct indices")
{
  const Mesh t = make_template(3);
  const auto lm = landmark_vertices(t);
  CHECK(lm.size() == 68);
  CHECK(std::set<int>(lm.begin(), lm.end()).size() == 68);
  CHECK(landmark_vertices(t) == lm);
}

TEST_CASE("grow_occlusion size and connectivity")
{
  const Mesh t = make_template(3);
  CHECK(grow_occlusion(t, 1.0 / 642.0, 1).count() == 1);
  CHECK(grow_occlusion(t, 0.30, 1).count() == 193);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double f : {0.05, 0.25, 0.4, 0.9}) {
      const VertexMask m = grow_occlusion(t, f, seed);
      CHECK(m.count() == static_cast<std::size_t>(std::ceil(f * 642.0 - 1e-9)));
      CHECK(connected(t, m));
    }
  }
  CHECK(grow_occlusion(t, 0.3, 4) == grow_occlusion(t, 0.3, 4));
  CHECK_THROWS_AS(grow_occlusion(t, 0.0, 1), InputError);
  CHECK_THROWS_AS(grow_occlusion(t, 0.95, 1), InputError);
}

TEST_CASE("curriculum ramp")
{
  const CurriculumSchedule s{0.05, 0.40, 100};
  CHECK(curriculum_fraction(s, 0) == 0.05);
  CHECK(curriculum_fraction(s, 50) == doctest::Approx(0.225).epsilon(1e-14));
  CHECK(curriculum_fraction(s, 100) == 0.40);
  CHECK(curriculum_fraction(s, 1000) == 0.40);
  CHECK_THROWS_AS(curriculum_fraction(s, -1), InputError);
  CHECK_THROWS_AS((CurriculumSchedule{0.5, 0.2, 10}.validate()), InputError);
  CHECK_THROWS_AS((CurriculumSchedule{0.1, 0.2, 0}.validate()), InputError);
}
