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

#ifndef DIVFACE__FITTER_HPP_
#define DIVFACE__FITTER_HPP_

#include "divface/blendshape.hpp"
#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

namespace divface
{

enum class ObservationMode
{
  Dense,
  Sparse,
};

using Landmarks2d = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// What the fitter sees of the subject.
///
/// Dense: a target mesh with per-vertex visibility. Sparse: 68 image-plane
/// landmarks with detector confidences. Either may carry an occlusion mask;
/// occluded vertices never contribute to the loss.
struct Observation
{
  ObservationMode mode = ObservationMode::Dense;
  std::optional<Mesh> target;
  VertexMask visibility;
  Landmarks2d landmarks;
  Eigen::VectorXd confidences;
  std::optional<VertexMask> occlusion;

  static Observation dense(Mesh target, VertexMask visibility, std::optional<VertexMask> occlusion = {});
  static Observation sparse(Landmarks2d landmarks, Eigen::VectorXd confidences,
    std::optional<VertexMask> occlusion = {});

  /// Dense mode: visibility minus occlusion.
  VertexMask visible_vertices() const;
};

/// Landmark file: 68 lines of `x y confidence`.
Observation load_landmarks(const std::filesystem::path & path);

/// Weak-perspective camera: u = scale * (R x)_xy + translation.
struct Camera
{
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double scale = 1.0;

  void validate() const;
};

Landmarks2d project_weak_perspective(const Vertices & points, const Camera & camera);

/// Flag i is set iff confidences[i] > tau.
std::vector<bool> select_visible_landmarks(const Eigen::VectorXd & confidences, double tau);

struct FitHyper
{
  double tau = 0.2;
  int n_iter = 500;
  double lambda_landmark = 1.0;
  double lambda_data = 1.0;
  double lambda_reg = 1e-3;
  double eta = 1e-2;
  /// Length of one optimisation unit for the rigid parameters (radians for
  /// rotation, model units for translation, log-units for scale).
  double rigid_unit = 0.05;

  void validate() const;
};

struct LossTerms
{
  double total = 0.0;
  double landmark = 0.0;
  double data = 0.0;
  double reg = 0.0;
};

/// The fitting objective over a flat parameter vector:
/// [identity | expression | per region (identity, expression) | rotation(3) | translation(3) | log-scale].
class FittingProblem
{
public:
  FittingProblem(const BlendshapeModel & model, const Observation & obs, const FitHyper & hyper);

  Eigen::Index num_params() const { return num_params_; }
  Eigen::Index num_coefficients() const { return num_coeffs_; }

  Eigen::VectorXd pack(const ModelParams & params) const;
  ModelParams unpack(const Eigen::VectorXd & p) const;

  /// Loss; when `gradient` is non-null it receives the exact gradient
  /// (subgradient 0 where an L1 residual is exactly zero).
  LossTerms evaluate(const Eigen::VectorXd & p, Eigen::VectorXd * gradient = nullptr) const;

  const std::vector<bool> & landmark_valid() const { return landmark_valid_; }

private:
  const BlendshapeModel & model_;
  const Observation & obs_;
  FitHyper hyper_;
  Eigen::Index num_coeffs_ = 0;
  Eigen::Index num_params_ = 0;
  std::vector<int> landmark_vertex_;
  std::vector<bool> landmark_valid_;
  std::vector<int> visible_;
  // per region: coordinate indices and the compact (identity | expression) basis
  std::vector<std::vector<Eigen::Index>> region_coords_;
  std::vector<Eigen::MatrixXd> region_basis_;
  Eigen::MatrixXd coarse_basis_;
};

struct FitResult
{
  Mesh partial;
  ModelParams params;
  Camera camera;
  std::vector<double> loss_trace;
  std::vector<bool> landmark_valid;
};

LossTerms fitting_loss(
  const BlendshapeModel & model, const ModelParams & params, const Observation & obs, const FitHyper & hyper,
  Eigen::VectorXd * gradient = nullptr);

/// Plain gradient descent on the fitting loss from zero coefficients and an
/// identity placement.
FitResult fit_partial(const BlendshapeModel & model, const Observation & obs, const FitHyper & hyper);

/// Same template and global bases at full rank, no local models.
BlendshapeModel global_only(const BlendshapeModel & model);

/// Rotation exp([w]_x) and its three partial derivatives.
Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d & w);
std::array<Eigen::Matrix3d, 3> rotation_jacobian(const Eigen::Vector3d & w);
Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d & r);

}  // namespace divface

#endif  // DIVFACE__FITTER_HPP_
