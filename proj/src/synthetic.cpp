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

#include "divface/synthetic.hpp"

#include "divface/error.hpp"
#include "divface/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace divface
{

Mesh make_template(int subdivisions)
{
  if (subdivisions < 0 || subdivisions > 5) {
    throw InputError("template subdivisions must be in [0, 5], got " + std::to_string(subdivisions));
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> pts = {
    {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
    {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
    {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto & p : pts) {
    p.normalize();
  }
  Faces faces = {
    {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
    {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
    {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
    {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) {
        return it->second;
      }
      pts.push_back((pts[static_cast<std::size_t>(a)] + pts[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(pts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    Faces next;
    next.reserve(faces.size() * 4);
    for (const Face & f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  Vertices v(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    v.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  }
  return {std::move(v), std::move(faces)};
}

Mesh GroundTruthGenerator::compose(const Eigen::VectorXd & shape, const Eigen::VectorXd & expr) const
{
  require(shape.size() == shape_fields.cols() && expr.size() == expr_fields.cols(),
    "coefficient count does not match generator fields");
  return templ.with_flat(templ.flat() + shape_fields * shape + expr_fields * expr);
}

std::vector<int> farthest_point_sampling(const Mesh & mesh, int count, int start)
{
  const auto n = static_cast<int>(mesh.num_vertices());
  require(count >= 1 && count <= n, "farthest point sampling: bad count");
  require(start >= 0 && start < n, "farthest point sampling: bad start vertex");
  const Vertices & v = mesh.vertices();
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  int current = start;
  for (int k = 0; k < count; ++k) {
    picked.push_back(current);
    int best = -1;
    double best_dist = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = (v.row(i) - v.row(current)).squaredNorm();
      auto & di = dist[static_cast<std::size_t>(i)];
      di = std::min(di, d);
      if (di > best_dist) {
        best_dist = di;
        best = i;
      }
    }
    current = best;
  }
  return picked;
}

namespace
{

void draw_coefficients(
  Eigen::VectorXd & out, double sigma, double decay, std::normal_distribution<double> & normal, Rng & rng)
{
  double scale = sigma;
  for (auto & x : out) {
    x = scale * normal(rng);
    scale *= decay;
  }
}

}  // namespace

GroundTruthGenerator make_generator(
  const Mesh & templ, int n_s, int n_e, std::uint64_t seed, GeneratorOptions options)
{
  require(n_s >= 1 && n_e >= 1, "generator needs at least one shape and one expression field");
  const auto n = static_cast<int>(templ.num_vertices());
  if (n_s + n_e > n) {
    throw InputError("generator: n_s + n_e = " + std::to_string(n_s + n_e) +
                     " exceeds the vertex count " + std::to_string(n));
  }
  require(options.bump_width > 0.0, "generator: bump width must be positive");
  require(options.spectrum_decay > 0.0 && options.spectrum_decay <= 1.0, "generator: spectrum decay must lie in (0, 1]");
  Rng rng(derive_seed(seed, "generator"));
  std::uniform_int_distribution<int> pick_vertex(0, n - 1);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int total = n_s + n_e;
  const std::vector<int> centers = farthest_point_sampling(templ, total, pick_vertex(rng));
  const Vertices & v = templ.vertices();
  const double inv_two_w2 = 1.0 / (2.0 * options.bump_width * options.bump_width);

  Eigen::MatrixXd fields(3 * n, total);
  for (int k = 0; k < total; ++k) {
    Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    const Eigen::RowVector3d c = v.row(centers[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n; ++i) {
      const double w = std::exp(-(v.row(i) - c).squaredNorm() * inv_two_w2);
      fields.block<3, 1>(3 * i, k) = w * dir;
    }
  }
  // Modified Gram-Schmidt with one re-orthogonalisation pass.
  for (int k = 0; k < total; ++k) {
    const double original = fields.col(k).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        fields.col(k) -= fields.col(j).dot(fields.col(k)) * fields.col(j);
      }
    }
    const double norm = fields.col(k).norm();
    if (!(norm > 1e-8 * original)) {
      throw NumericError("generator: displacement fields are rank deficient");
    }
    fields.col(k) /= norm;
  }
  return GroundTruthGenerator{
    templ, fields.leftCols(n_s), fields.rightCols(n_e), seed, options.spectrum_decay};
}

std::vector<Sample> sample_dataset(
  const GroundTruthGenerator & gen, int count, double coeff_sigma, std::uint64_t seed)
{
  require(count >= 1, "sample_dataset: count must be >= 1");
  require(coeff_sigma >= 0.0, "sample_dataset: sigma must be non-negative");
  Rng rng(derive_seed(seed, "dataset"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd shape(gen.shape_fields.cols());
    Eigen::VectorXd expr(gen.expr_fields.cols());
    draw_coefficients(shape, coeff_sigma, gen.spectrum_decay, normal, rng);
    draw_coefficients(expr, coeff_sigma, gen.spectrum_decay, normal, rng);
    out.push_back({gen.compose(shape, expr), shape, expr});
  }
  return out;
}

std::vector<Mesh> SubjectCorpus::meshes() const
{
  std::vector<Mesh> out;
  out.reserve(samples.size());
  for (const auto & s : samples) {
    out.push_back(s.mesh);
  }
  return out;
}

SubjectCorpus sample_subjects(
  const GroundTruthGenerator & gen, int subjects, int expressions_per_subject, double coeff_sigma,
  std::uint64_t seed)
{
  require(subjects >= 1 && expressions_per_subject >= 0, "sample_subjects: bad counts");
  require(coeff_sigma >= 0.0, "sample_subjects: sigma must be non-negative");
  Rng rng(derive_seed(seed, "subjects"));
  std::normal_distribution<double> normal(0.0, 1.0);
  SubjectCorpus corpus;
  for (int s = 0; s < subjects; ++s) {
    Eigen::VectorXd shape(gen.shape_fields.cols());
    draw_coefficients(shape, coeff_sigma, gen.spectrum_decay, normal, rng);
    const Eigen::VectorXd neutral_expr = Eigen::VectorXd::Zero(gen.expr_fields.cols());
    corpus.neutral_index.push_back(static_cast<int>(corpus.samples.size()));
    corpus.samples.push_back({gen.compose(shape, neutral_expr), shape, neutral_expr});
    corpus.subject.push_back(s);
    for (int e = 0; e < expressions_per_subject; ++e) {
      Eigen::VectorXd expr(gen.expr_fields.cols());
      draw_coefficients(expr, coeff_sigma, gen.spectrum_decay, normal, rng);
      corpus.samples.push_back({gen.compose(shape, expr), shape, expr});
      corpus.subject.push_back(s);
    }
  }
  return corpus;
}

RegionAtlas make_region_atlas(const Mesh & templ)
{
  const auto n = templ.num_vertices();
  require(n >= RegionAtlas::kNumRegions, "template too small for a 14-region atlas");
  const auto seeds = farthest_point_sampling(templ, static_cast<int>(RegionAtlas::kNumRegions), 0);
  const auto adj = vertex_adjacency(templ);
  // Multi-source BFS; first arrival claims a vertex.
  std::vector<int> label(n, -1);
  std::deque<int> queue;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    label[static_cast<std::size_t>(seeds[r])] = static_cast<int>(r);
    queue.push_back(seeds[r]);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (label[static_cast<std::size_t>(w)] < 0) {
        label[static_cast<std::size_t>(w)] = label[static_cast<std::size_t>(u)];
        queue.push_back(w);
      }
    }
  }
  std::vector<Region> regions;
  for (std::size_t r = 0; r < RegionAtlas::kNumRegions; ++r) {
    char name[16];
    std::snprintf(name, sizeof name, "region_%02zu", r);
    VertexMask mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] == static_cast<int>(r)) {
        mask.set(i, true);
      }
    }
    regions.push_back({name, std::move(mask)});
  }
  return RegionAtlas(std::move(regions));
}

std::vector<int> landmark_vertices(const Mesh & templ)
{
  require(templ.num_vertices() >= static_cast<std::size_t>(kNumLandmarks),
    "template has fewer than 68 vertices");
  return farthest_point_sampling(templ, kNumLandmarks, 0);
}

VertexMask grow_occlusion(const Mesh & mesh, double fraction, std::uint64_t seed)
{
  if (!(fraction > 0.0 && fraction <= 0.9)) {
    throw InputError("occlusion fraction must be in (0, 0.9], got " + std::to_string(fraction));
  }
  const auto n = mesh.num_vertices();
  // The small slack keeps exact products such as (1/N) * N from rounding up.
  const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  Rng rng(derive_seed(seed, "occlusion"));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t start = pick(rng);
  const auto adj = vertex_adjacency(mesh);
  VertexMask mask(n);
  std::deque<int> queue{static_cast<int>(start)};
  mask.set(start, true);
  std::size_t selected = 1;
  while (!queue.empty() && selected < target) {
    const int u = queue.front();
    queue.pop_front();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (selected >= target) {
        break;
      }
      if (!mask[static_cast<std::size_t>(w)]) {
        mask.set(static_cast<std::size_t>(w), true);
        ++selected;
        queue.push_back(w);
      }
    }
  }
  if (selected < target) {
    throw InputError("occlusion: mesh component smaller than requested mask");
  }
  return mask;
}

void CurriculumSchedule::validate() const
{
  require(start_fraction > 0.0 && start_fraction < 1.0, "curriculum start_fraction must be in (0, 1)");
  require(end_fraction > 0.0 && end_fraction < 1.0, "curriculum end_fraction must be in (0, 1)");
  require(start_fraction <= end_fraction, "curriculum start_fraction exceeds end_fraction");
  require(ramp_epochs > 0, "curriculum ramp_epochs must be positive");
}

double curriculum_fraction(const CurriculumSchedule & schedule, int epoch)
{
  require(epoch >= 0, "curriculum epoch must be non-negative");
  if (epoch >= schedule.ramp_epochs) {
    return schedule.end_fraction;
  }
  const double t = static_cast<double>(epoch) / static_cast<double>(schedule.ramp_epochs);
  return schedule.start_fraction + t * (schedule.end_fraction - schedule.start_fraction);
}

}  // namespace divface
