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

#ifndef DIVFACE__SYNTHETIC_HPP_
#define DIVFACE__SYNTHETIC_HPP_

#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace divface
{

/// Unit icosphere. Subdivision level k in [0, 5] gives 10 * 4^k + 2 vertices.
Mesh make_template(int subdivisions);

/// Parametric ground-truth family: template plus linear combinations of
/// smooth displacement fields. All n_s + n_e flattened fields are jointly
/// orthonormal.
struct GroundTruthGenerator
{
  Mesh templ;
  Eigen::MatrixXd shape_fields;  // 3N x n_s
  Eigen::MatrixXd expr_fields;   // 3N x n_e
  std::uint64_t seed = 0;
  /// Coefficient i of either group is drawn with standard deviation
  /// sigma * spectrum_decay^i.
  double spectrum_decay = 1.0;

  Mesh compose(const Eigen::VectorXd & shape, const Eigen::VectorXd & expr) const;
};

struct GeneratorOptions
{
  /// Gaussian bump radius on the unit sphere.
  double bump_width = 0.4;
  /// Per-field falloff of the coefficient spread; 1 gives a flat spectrum.
  double spectrum_decay = 1.0;
};

GroundTruthGenerator make_generator(
  const Mesh & templ, int n_s, int n_e, std::uint64_t seed, GeneratorOptions options = {});

struct Sample
{
  Mesh mesh;
  Eigen::VectorXd shape;
  Eigen::VectorXd expr;
};

/// `count` independent samples with N(0, coeff_sigma^2) coefficients.
std::vector<Sample> sample_dataset(
  const GroundTruthGenerator & gen, int count, double coeff_sigma, std::uint64_t seed);

/// Subject-structured corpus: each subject owns one identity vector and a
/// neutral sample (zero expression) followed by `expressions_per_subject`
/// expressive samples.
struct SubjectCorpus
{
  std::vector<Sample> samples;
  std::vector<int> subject;        // per sample
  std::vector<int> neutral_index;  // per subject, index into samples

  std::vector<Mesh> meshes() const;
};

SubjectCorpus sample_subjects(
  const GroundTruthGenerator & gen, int subjects, int expressions_per_subject, double coeff_sigma,
  std::uint64_t seed);

/// Euclidean farthest-point sampling starting from `start`.
std::vector<int> farthest_point_sampling(const Mesh & mesh, int count, int start = 0);

/// 14 BFS-connected regions grown from farthest-point seeds.
RegionAtlas make_region_atlas(const Mesh & templ);

/// The 68 template vertices used as landmarks.
std::vector<int> landmark_vertices(const Mesh & templ);
inline constexpr int kNumLandmarks = 68;

/// Connected occlusion of exactly ceil(fraction * N) vertices grown by BFS
/// from a random seed vertex.
VertexMask grow_occlusion(const Mesh & mesh, double fraction, std::uint64_t seed);

struct CurriculumSchedule
{
  double start_fraction = 0.05;
  double end_fraction = 0.40;
  int ramp_epochs = 100;

  void validate() const;
};

/// Linear ramp from start_fraction (epoch 0) to end_fraction (ramp_epochs and later).
double curriculum_fraction(const CurriculumSchedule & schedule, int epoch);

}  // namespace divface

#endif  // DIVFACE__SYNTHETIC_HPP_
