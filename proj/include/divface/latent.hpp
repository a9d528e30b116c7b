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

#ifndef DIVFACE__LATENT_HPP_
#define DIVFACE__LATENT_HPP_

#include "divface/mesh.hpp"
#include "divface/synthetic.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace divface
{

enum class LatentVariant
{
  Linear = 0,
  Mlp = 1,
};

/// y = w x + b, applied column-wise.
struct DenseLayer
{
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

/// Encoder/decoder pair with a standard normal latent prior.
///
/// Linear: x = mean + W z with isotropic noise `noise_var` and latent prior
/// N(0, prior_var I).
/// Mlp: dense ELU networks on coordinates normalised by `mean` and
/// `data_scale`; the encoder emits (mu, log sigma) stacked in one vector.
struct LatentModel
{
  LatentVariant variant = LatentVariant::Linear;
  Mesh templ;
  Eigen::VectorXd mean;
  Eigen::MatrixXd weights;  // linear only, 3N x d
  double noise_var = 0.0;   // linear only
  double prior_var = 1.0;   // linear only: z ~ N(0, prior_var I)
  double data_scale = 1.0;  // mlp only
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  int latent_dim() const;
  void validate() const;
};

struct LinearTrainOptions
{
  /// Lower bound on the isotropic noise variance, relative to the largest
  /// retained eigenvalue.
  double min_noise_ratio = 1e-6;
  /// Isotropic latent prior variance; 0 selects default_prior_variance(d).
  double prior_var = 0.0;
};

/// v such that 3 sqrt(d) lies three standard deviations above E[z^T z] for
/// z ~ N(0, v I): v = 3 sqrt(d) / (d + 3 sqrt(2 d)).
double default_prior_variance(int d);

LatentModel train_linear(const std::vector<Mesh> & dataset, int d, LinearTrainOptions options = {});

struct VaeTrainConfig
{
  int latent_dim = 16;
  int epochs = 60;
  int batch_size = 16;
  double step_size = 1e-3;
  double kl_weight = 1e-3;
  double laplacian_weight = 1e-1;
  CurriculumSchedule curriculum{0.05, 0.40, 40};
  std::uint64_t seed = 0;

  void validate() const;
};

struct VaeTrainResult
{
  LatentModel model;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

VaeTrainResult train_vae(const std::vector<Mesh> & dataset, const VaeTrainConfig & cfg);

/// Fresh MLP with the fixed layer widths, mean/scale taken from `dataset`.
LatentModel init_vae(const std::vector<Mesh> & dataset, int latent_dim, std::uint64_t seed);

struct VaeLossTerms
{
  double total = 0.0;
  double reconstruction = 0.0;
  double laplacian = 0.0;
  double kl = 0.0;
};

/// Gradients with the same layout as the model's layers.
struct VaeGradients
{
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
};

/// Mean loss over a batch. `targets` are flattened meshes (3N x B), `occlusions`
/// one mask per column (occluded coordinates are zeroed in the encoder
/// input), `noise` the reparameterisation draws (d x B).
VaeLossTerms vae_batch_loss(
  const LatentModel & model, const Eigen::MatrixXd & targets, const std::vector<VertexMask> & occlusions,
  const Eigen::MatrixXd & noise, const Eigen::SparseMatrix<double> & laplacian, double kl_weight,
  double laplacian_weight, VaeGradients * gradients = nullptr);

struct Posterior
{
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
};

/// Gaussian posterior of the latent given `partial`; vertices flagged in
/// `occlusion` are treated as unobserved.
Posterior encode(const LatentModel & model, const Mesh & partial, const VertexMask & occlusion);

Eigen::VectorXd decode_flat(const LatentModel & model, const Eigen::VectorXd & z);
Mesh decode(const LatentModel & model, const Eigen::VectorXd & z);

/// J(z)^T cotangent for the decoder Jacobian J at z; cotangent is flattened 3N.
Eigen::VectorXd decoder_pullback(const LatentModel & model, const Eigen::VectorXd & z, const Eigen::VectorXd & cotangent);

std::vector<Eigen::VectorXd> sample_latents(
  const Eigen::VectorXd & mu, const Eigen::VectorXd & sigma, int count, std::uint64_t seed);

void save_latent_model(const LatentModel & model, const std::filesystem::path & path);
LatentModel load_latent_model(const std::filesystem::path & path);

}  // namespace divface

#endif  // DIVFACE__LATENT_HPP_
