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

#ifndef DIVFACE__BLENDSHAPE_HPP_
#define DIVFACE__BLENDSHAPE_HPP_

#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace divface
{

/// Orthonormal principal directions (columns) with descending eigenvalues.
struct PcaBasis
{
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
};

/// PCA of the columns of `data` (D x n, one sample per column).
///
/// With `allow_degenerate` the requested rank is returned even when the data
/// has less variance than that; otherwise asking for more components than
/// the numerical rank throws InputError.
PcaBasis principal_components(
  const Eigen::MatrixXd & data, int rank, bool center, bool allow_degenerate = false);

/// Meshes grouped by subject, each subject carrying a neutral reference.
struct TrainingCorpus
{
  std::vector<Mesh> meshes;
  std::vector<int> subject;        // subject id per mesh
  std::vector<int> neutral_index;  // per subject: index of its neutral mesh
};

/// Template plus global identity and expression bases.
struct GlobalModel
{
  Mesh templ;
  Eigen::MatrixXd shape_basis;  // 3N x |beta|
  Eigen::MatrixXd expr_basis;   // 3N x |psi|
  Eigen::VectorXd shape_eigenvalues;
  Eigen::VectorXd expr_eigenvalues;

  int n_shape() const { return static_cast<int>(shape_basis.cols()); }
  int n_expr() const { return static_cast<int>(expr_basis.cols()); }
};

/// Region-restricted residual bases. Column support is confined to the
/// region's vertices.
struct LocalModels
{
  RegionAtlas atlas;
  std::vector<Eigen::MatrixXd> shape;  // per region, 3N x r_s
  std::vector<Eigen::MatrixXd> expr;   // per region, 3N x r_e
  std::vector<Eigen::VectorXd> shape_eigenvalues;
  std::vector<Eigen::VectorXd> expr_eigenvalues;
};

struct CoarseRanks
{
  int shape = 4;
  int expr = 4;
};

struct LocalRanks
{
  int shape = 8;
  int expr = 8;
};

struct BlendshapeModel
{
  GlobalModel global;
  LocalModels local;
  CoarseRanks coarse;

  std::size_t num_regions() const { return local.shape.size(); }
  int region_shape_rank(std::size_t r) const { return static_cast<int>(local.shape[r].cols()); }
  int region_expr_rank(std::size_t r) const { return static_cast<int>(local.expr[r].cols()); }

  void validate() const;
};

/// Every coefficient of the global+local model plus the rigid placement.
struct ModelParams
{
  Eigen::VectorXd shape;  // coarse identity, length N_S
  Eigen::VectorXd expr;   // coarse expression, length N_E
  std::vector<Eigen::VectorXd> region_shape;
  std::vector<Eigen::VectorXd> region_expr;
  RigidTransform rigid;

  static ModelParams zeros(const BlendshapeModel & model);
};

struct GlobalCoefficients
{
  Eigen::VectorXd shape;
  Eigen::VectorXd expr;
};

GlobalModel train_global(const TrainingCorpus & corpus, int n_shape, int n_expr);

/// Least-squares coefficients of `target` in the global model.
GlobalCoefficients fit_global_params(const GlobalModel & model, const Mesh & target);

/// T + sum_{n <= N_S} beta_n S_n + sum_{n <= N_E} psi_n E_n, flattened.
Eigen::VectorXd coarse_flat(
  const GlobalModel & model, const Eigen::VectorXd & shape, const Eigen::VectorXd & expr,
  int n_shape, int n_expr);

/// Coarse reconstruction at the model's coarse ranks; extra coefficients are ignored.
Mesh coarse_reconstruct(
  const BlendshapeModel & model, const Eigen::VectorXd & shape, const Eigen::VectorXd & expr);

struct LocalTrainOptions
{
  /// Procrustes-align each sample to the template before computing residuals.
  bool unpose = false;
};

LocalModels train_local(
  const GlobalModel & model, const std::vector<Mesh> & dataset, const RegionAtlas & atlas,
  CoarseRanks coarse, LocalRanks local, LocalTrainOptions options = {});

/// Unposed shape: coarse part plus all region contributions.
Eigen::VectorXd evaluate_unposed(const BlendshapeModel & model, const ModelParams & params);

/// rigid applied to evaluate_unposed.
Mesh evaluate(const BlendshapeModel & model, const ModelParams & params);

void save_model(const BlendshapeModel & model, const std::filesystem::path & path);
BlendshapeModel load_model(const std::filesystem::path & path);

}  // namespace divface

#endif  // DIVFACE__BLENDSHAPE_HPP_
