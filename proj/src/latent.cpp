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

#include "divface/latent.hpp"

#include "divface/error.hpp"
#include "divface/random.hpp"
#include "divface/tensor_io.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace divface
{

namespace
{

constexpr int kHidden1 = 256;
constexpr int kHidden2 = 64;

std::string layer_name(const char * fmt, std::size_t i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), fmt, i);
  return buf;
}

Eigen::MatrixXd elu(const Eigen::MatrixXd & x)
{
  return x.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
}

Eigen::MatrixXd elu_derivative(const Eigen::MatrixXd & x)
{
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
}

struct ForwardTrace
{
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre;
};

Eigen::MatrixXd forward(const std::vector<DenseLayer> & layers, const Eigen::MatrixXd & x, ForwardTrace * trace)
{
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].w * a;
    z.colwise() += layers[i].b;
    if (trace) {
      trace->inputs.push_back(std::move(a));
      trace->pre.push_back(z);
    }
    a = i + 1 < layers.size() ? elu(z) : std::move(z);
  }
  return a;
}

// Returns the gradient with respect to the network input.
Eigen::MatrixXd backward(
  const std::vector<DenseLayer> & layers, const ForwardTrace & trace, Eigen::MatrixXd g,
  std::vector<DenseLayer> * grads)
{
  if (grads) {
    grads->resize(layers.size());
  }
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (k + 1 < layers.size()) {
      g = g.cwiseProduct(elu_derivative(trace.pre[k]));
    }
    if (grads) {
      (*grads)[k].w = g * trace.inputs[k].transpose();
      (*grads)[k].b = g.rowwise().sum();
    }
    g = layers[k].w.transpose() * g;
  }
  return g;
}

DenseLayer random_layer(Eigen::Index in, Eigen::Index out, Rng & rng)
{
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
  for (Eigen::Index c = 0; c < in; ++c) {
    for (Eigen::Index r = 0; r < out; ++r) {
      layer.w(r, c) = normal(rng);
    }
  }
  return layer;
}

Eigen::MatrixXd flatten(const std::vector<Mesh> & dataset)
{
  require(!dataset.empty(), "latent model: empty dataset");
  const auto dim = 3 * static_cast<Eigen::Index>(dataset.front().num_vertices());
  Eigen::MatrixXd data(dim, static_cast<Eigen::Index>(dataset.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    require(dataset[i].num_vertices() == dataset.front().num_vertices(), "latent model: vertex count mismatch in dataset");
    data.col(static_cast<Eigen::Index>(i)) = dataset[i].flat();
  }
  return data;
}

// Coordinate-level visibility: 1 where the vertex is observed.
Eigen::VectorXd visible_coordinates(const VertexMask & occlusion)
{
  Eigen::VectorXd v(3 * static_cast<Eigen::Index>(occlusion.size()));
  for (std::size_t i = 0; i < occlusion.size(); ++i) {
    v.segment<3>(3 * static_cast<Eigen::Index>(i)).setConstant(occlusion[i] ? 0.0 : 1.0);
  }
  return v;
}

double sign0(double x)
{
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

}  // namespace

int LatentModel::latent_dim() const
{
  if (variant == LatentVariant::Linear) {
    return static_cast<int>(weights.cols());
  }
  return decoder.empty() ? 0 : static_cast<int>(decoder.front().w.cols());
}

void LatentModel::validate() const
{
  const auto dim = 3 * static_cast<Eigen::Index>(templ.num_vertices());
  require(mean.size() == dim, "latent model: mean length does not match the template");
  if (variant == LatentVariant::Linear) {
    require(weights.rows() == dim && weights.cols() >= 1, "latent model: decoder matrix shape mismatch");
    require(noise_var >= 0.0 && std::isfinite(noise_var), "latent model: noise variance must be >= 0");
    require(prior_var > 0.0 && std::isfinite(prior_var), "latent model: prior variance must be positive");
    return;
  }
  require(data_scale > 0.0, "latent model: data scale must be positive");
  require(!encoder.empty() && !decoder.empty(), "latent model: missing layers");
  auto check_chain = [](const std::vector<DenseLayer> & layers, Eigen::Index in, const char * who) {
    for (const auto & l : layers) {
      require(l.w.cols() == in && l.b.size() == l.w.rows(), std::string("latent model: ") + who + " layer shape mismatch");
      in = l.w.rows();
    }
    return in;
  };
  const auto d = decoder.front().w.cols();
  require(check_chain(encoder, dim, "encoder") == 2 * d, "latent model: encoder output must be 2 x latent_dim");
  require(check_chain(decoder, d, "decoder") == dim, "latent model: decoder output must match the template");
}

double default_prior_variance(int d)
{
  require(d >= 1, "latent dimension must be >= 1");
  const double dd = static_cast<double>(d);
  return 3.0 * std::sqrt(dd) / (dd + 3.0 * std::sqrt(2.0 * dd));
}

LatentModel train_linear(const std::vector<Mesh> & dataset, int d, LinearTrainOptions options)
{
  require(d >= 1, "train_linear: latent dimension must be >= 1");
  const auto n = static_cast<Eigen::Index>(dataset.size());
  if (n <= d) {
    throw InputError("train_linear: insufficient data, " + std::to_string(n) + " samples for d = " + std::to_string(d));
  }
  const Eigen::MatrixXd data = flatten(dataset);
  const Eigen::Index dim = data.rows();
  require(d < dim, "train_linear: latent dimension must be below the data dimension");
  LatentModel model;
  model.variant = LatentVariant::Linear;
  model.mean = data.rowwise().mean();
  model.templ = dataset.front().with_flat(model.mean);
  Eigen::MatrixXd centered = data;
  centered.colwise() -= model.mean;
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const Eigen::VectorXd eig = svd.singularValues().array().square() / static_cast<double>(n - 1);
  const double top = eig.size() > 0 ? eig[0] : 0.0;
  if (!(top > 0.0) || eig.size() < d || eig[d - 1] <= 1e-12 * top) {
    throw InputError("train_linear: latent dimension " + std::to_string(d) + " exceeds the rank of the data");
  }
  const double discarded = eig.tail(eig.size() - d).sum();
  model.noise_var = std::max(discarded / static_cast<double>(dim - d), options.min_noise_ratio * top);
  if (eig[d - 1] <= model.noise_var) {
    throw InputError("train_linear: trailing latent dimension carries no variance above the noise floor");
  }
  Eigen::MatrixXd u = svd.matrixU().leftCols(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::Index arg = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg);
    if (u(arg, c) < 0.0) {
      u.col(c) *= -1.0;
    }
  }
  require(options.prior_var >= 0.0, "train_linear: prior variance must be >= 0");
  model.prior_var = options.prior_var > 0.0 ? options.prior_var : default_prior_variance(d);
  model.weights =
    u * ((eig.head(d).array() - model.noise_var) / model.prior_var).sqrt().matrix().asDiagonal();
  return model;
}

void VaeTrainConfig::validate() const
{
  require(latent_dim >= 1, "vae: latent_dim must be >= 1");
  require(epochs >= 1 && batch_size >= 1, "vae: epochs and batch_size must be positive");
  require(step_size > 0.0 && kl_weight > 0.0 && laplacian_weight > 0.0, "vae: step size and loss weights must be positive");
  curriculum.validate();
}

LatentModel init_vae(const std::vector<Mesh> & dataset, int latent_dim, std::uint64_t seed)
{
  require(latent_dim >= 1, "vae: latent_dim must be >= 1");
  const Eigen::MatrixXd data = flatten(dataset);
  LatentModel model;
  model.variant = LatentVariant::Mlp;
  model.mean = data.rowwise().mean();
  model.templ = dataset.front().with_flat(model.mean);
  const double rms = std::sqrt((data.colwise() - model.mean).squaredNorm() / static_cast<double>(data.size()));
  model.data_scale = rms > 0.0 ? rms : 1.0;
  Rng rng(derive_seed(seed, "vae-init"));
  const Eigen::Index dim = data.rows();
  model.encoder.push_back(random_layer(dim, kHidden1, rng));
  model.encoder.push_back(random_layer(kHidden1, kHidden2, rng));
  model.encoder.push_back(random_layer(kHidden2, 2 * latent_dim, rng));
  model.decoder.push_back(random_layer(latent_dim, kHidden2, rng));
  model.decoder.push_back(random_layer(kHidden2, kHidden1, rng));
  model.decoder.push_back(random_layer(kHidden1, dim, rng));
  return model;
}

VaeLossTerms vae_batch_loss(
  const LatentModel & model, const Eigen::MatrixXd & targets, const std::vector<VertexMask> & occlusions,
  const Eigen::MatrixXd & noise, const Eigen::SparseMatrix<double> & laplacian, double kl_weight,
  double laplacian_weight, VaeGradients * gradients)
{
  require(model.variant == LatentVariant::Mlp, "vae_batch_loss: mlp model required");
  const Eigen::Index dim = model.mean.size();
  const Eigen::Index nb = targets.cols();
  const int d = model.latent_dim();
  require(targets.rows() == dim && nb >= 1, "vae_batch_loss: target shape mismatch");
  require(static_cast<Eigen::Index>(occlusions.size()) == nb, "vae_batch_loss: one occlusion mask per sample");
  require(noise.rows() == d && noise.cols() == nb, "vae_batch_loss: noise shape mismatch");
  const Eigen::Index nv = dim / 3;
  require(laplacian.rows() == nv && laplacian.cols() == nv, "vae_batch_loss: laplacian size mismatch");

  Eigen::MatrixXd normalized = (targets.colwise() - model.mean) / model.data_scale;
  Eigen::MatrixXd input = normalized;
  for (Eigen::Index b = 0; b < nb; ++b) {
    input.col(b).array() *= visible_coordinates(occlusions[static_cast<std::size_t>(b)]).array();
  }
  ForwardTrace enc_trace;
  ForwardTrace dec_trace;
  const Eigen::MatrixXd h = forward(model.encoder, input, gradients ? &enc_trace : nullptr);
  const Eigen::MatrixXd mu = h.topRows(d);
  const Eigen::MatrixXd log_sigma = h.bottomRows(d);
  const Eigen::MatrixXd sigma = log_sigma.array().exp().matrix();
  const Eigen::MatrixXd z = mu + sigma.cwiseProduct(noise);
  const Eigen::MatrixXd y = forward(model.decoder, z, gradients ? &dec_trace : nullptr);

  const double inv_b = 1.0 / static_cast<double>(nb);
  const double inv_coords = 1.0 / static_cast<double>(dim);
  VaeLossTerms terms;
  const Eigen::MatrixXd diff = y - normalized;
  terms.reconstruction = diff.cwiseAbs().sum() * inv_coords * inv_b;
  Eigen::MatrixXd dy = diff.unaryExpr(&sign0) * (inv_coords * inv_b);

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Eigen::Map<const RowMat> yb(diff.col(b).data(), nv, 3);
    const RowMat lap = laplacian * yb;
    terms.laplacian += lap.cwiseAbs().sum() * inv_coords * inv_b;
    if (gradients) {
      const RowMat back = laplacian.transpose() * lap.unaryExpr(&sign0);
      Eigen::Map<RowMat> dyb(dy.col(b).data(), nv, 3);
      dyb += back * (laplacian_weight * inv_coords * inv_b);
    }
  }
  terms.kl = 0.5 * inv_b * (mu.array().square() + sigma.array().square() - 1.0 - 2.0 * log_sigma.array()).sum();
  terms.total = terms.reconstruction + laplacian_weight * terms.laplacian + kl_weight * terms.kl;

  if (gradients) {
    const Eigen::MatrixXd dz = backward(model.decoder, dec_trace, dy, &gradients->decoder);
    Eigen::MatrixXd dh(2 * d, nb);
    dh.topRows(d) = dz + kl_weight * inv_b * mu;
    dh.bottomRows(d) = dz.cwiseProduct(noise).cwiseProduct(sigma) +
                       kl_weight * inv_b * (sigma.array().square() - 1.0).matrix();
    backward(model.encoder, enc_trace, dh, &gradients->encoder);
  }
  return terms;
}

VaeTrainResult train_vae(const std::vector<Mesh> & dataset, const VaeTrainConfig & cfg)
{
  cfg.validate();
  VaeTrainResult result{init_vae(dataset, cfg.latent_dim, cfg.seed), {}};
  LatentModel & model = result.model;
  const Eigen::MatrixXd data = flatten(dataset);
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto laplacian = graph_laplacian(dataset.front());

  // Adam state, one slot per weight and bias tensor
  std::vector<Eigen::MatrixXd *> params;
  for (auto * layers : {&model.encoder, &model.decoder}) {
    for (auto & l : *layers) {
      params.push_back(&l.w);
    }
  }
  std::vector<Eigen::VectorXd *> biases;
  for (auto * layers : {&model.encoder, &model.decoder}) {
    for (auto & l : *layers) {
      biases.push_back(&l.b);
    }
  }
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  for (auto * p : params) {
    m_w.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    v_w.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
  for (auto * p : biases) {
    m_b.push_back(Eigen::VectorXd::Zero(p->size()));
    v_b.push_back(Eigen::VectorXd::Zero(p->size()));
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  long step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  const std::uint64_t occ_seed = derive_seed(cfg.seed, "vae-occlusion");
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "vae-reparam");
  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, "vae-shuffle");
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng shuffle_rng(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double fraction = curriculum_fraction(cfg.curriculum, epoch);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index nb = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd batch(data.rows(), nb);
      std::vector<VertexMask> occlusions;
      for (Eigen::Index b = 0; b < nb; ++b) {
        const Eigen::Index idx = order[static_cast<std::size_t>(start + b)];
        batch.col(b) = data.col(idx);
        const std::uint64_t key = static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(idx);
        occlusions.push_back(grow_occlusion(dataset.front(), fraction, derive_seed(occ_seed, key)));
      }
      Rng noise_rng(derive_seed(derive_seed(noise_seed, static_cast<std::uint64_t>(epoch)), static_cast<std::uint64_t>(batches)));
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::MatrixXd noise(cfg.latent_dim, nb);
      for (Eigen::Index c = 0; c < nb; ++c) {
        for (Eigen::Index r = 0; r < cfg.latent_dim; ++r) {
          noise(r, c) = normal(noise_rng);
        }
      }
      VaeGradients grads;
      const VaeLossTerms terms =
        vae_batch_loss(model, batch, occlusions, noise, laplacian, cfg.kl_weight, cfg.laplacian_weight, &grads);
      if (!std::isfinite(terms.total)) {
        throw NumericError("vae training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += terms.total;
      ++batches;

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      std::size_t slot = 0;
      for (auto * grad_layers : {&grads.encoder, &grads.decoder}) {
        for (const auto & g : *grad_layers) {
          m_w[slot] = beta1 * m_w[slot] + (1.0 - beta1) * g.w;
          v_w[slot] = beta2 * v_w[slot] + (1.0 - beta2) * g.w.cwiseAbs2();
          params[slot]->array() -=
            cfg.step_size * (m_w[slot].array() / c1) / ((v_w[slot].array() / c2).sqrt() + eps);
          m_b[slot] = beta1 * m_b[slot] + (1.0 - beta1) * g.b;
          v_b[slot] = beta2 * v_b[slot] + (1.0 - beta2) * g.b.cwiseAbs2();
          biases[slot]->array() -=
            cfg.step_size * (m_b[slot].array() / c1) / ((v_b[slot].array() / c2).sqrt() + eps);
          ++slot;
        }
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

Posterior encode(const LatentModel & model, const Mesh & partial, const VertexMask & occlusion)
{
  const auto dim = model.mean.size();
  require(3 * static_cast<Eigen::Index>(partial.num_vertices()) == dim, "encode: vertex count does not match the latent model");
  require(occlusion.size() == partial.num_vertices(), "encode: occlusion mask size mismatch");
  const int d = model.latent_dim();
  Posterior post;
  if (model.variant == LatentVariant::Linear) {
    const std::vector<int> visible = occlusion.complement().indices();
    const auto rows = 3 * static_cast<Eigen::Index>(visible.size());
    Eigen::MatrixXd wv(rows, d);
    Eigen::VectorXd xv(rows);
    const Eigen::VectorXd x = partial.flat();
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const auto src = 3 * static_cast<Eigen::Index>(visible[k]);
      const auto dst = 3 * static_cast<Eigen::Index>(k);
      wv.middleRows(dst, 3) = model.weights.middleRows(src, 3);
      xv.segment<3>(dst) = x.segment<3>(src) - model.mean.segment<3>(src);
    }
    post.mu = rows > 0 ? Eigen::VectorXd(wv.completeOrthogonalDecomposition().solve(xv)) : Eigen::VectorXd::Zero(d);
    // posterior covariance (W_V^T W_V / s2 + I / v)^-1
    const double s2 = std::max(model.noise_var, 1e-300);
    Eigen::MatrixXd a = wv.transpose() * wv;
    a.diagonal().array() += s2 / model.prior_var;
    const Eigen::MatrixXd cov = s2 * a.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    post.sigma = cov.diagonal().cwiseMax(1e-300).cwiseSqrt();
    return post;
  }
  Eigen::VectorXd input = ((partial.flat() - model.mean) / model.data_scale).cwiseProduct(visible_coordinates(occlusion));
  const Eigen::VectorXd h = forward(model.encoder, input, nullptr);
  post.mu = h.head(d);
  post.sigma = h.tail(d).array().exp().cwiseMax(1e-300);
  return post;
}

Eigen::VectorXd decode_flat(const LatentModel & model, const Eigen::VectorXd & z)
{
  require(z.size() == model.latent_dim(), "decode: latent has " + std::to_string(z.size()) + " entries, model expects " +
                                            std::to_string(model.latent_dim()));
  if (model.variant == LatentVariant::Linear) {
    return model.mean + model.weights * z;
  }
  return model.mean + model.data_scale * forward(model.decoder, z, nullptr);
}

Mesh decode(const LatentModel & model, const Eigen::VectorXd & z)
{
  return model.templ.with_flat(decode_flat(model, z));
}

Eigen::VectorXd decoder_pullback(const LatentModel & model, const Eigen::VectorXd & z, const Eigen::VectorXd & cotangent)
{
  require(z.size() == model.latent_dim(), "decoder_pullback: latent dimension mismatch");
  require(cotangent.size() == model.mean.size(), "decoder_pullback: cotangent length mismatch");
  if (model.variant == LatentVariant::Linear) {
    return model.weights.transpose() * cotangent;
  }
  ForwardTrace trace;
  forward(model.decoder, z, &trace);
  return backward(model.decoder, trace, model.data_scale * cotangent, nullptr);
}

std::vector<Eigen::VectorXd> sample_latents(
  const Eigen::VectorXd & mu, const Eigen::VectorXd & sigma, int count, std::uint64_t seed)
{
  require(count >= 1, "sample_latents: count must be >= 1");
  require(mu.size() == sigma.size(), "sample_latents: mu and sigma lengths differ");
  require((sigma.array() >= 0.0).all(), "sample_latents: sigma must be >= 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd z(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
      z[k] = mu[k] + sigma[k] * normal(rng);
    }
    out.push_back(std::move(z));
  }
  return out;
}

void save_latent_model(const LatentModel & model, const std::filesystem::path & path)
{
  model.validate();
  TensorArchive archive;
  put_template(archive, model.templ);
  archive.put_scalar("variant", static_cast<double>(model.variant));
  if (model.variant == LatentVariant::Linear) {
    archive.put_matrix("dec_0_w", model.weights);
    archive.put_vector("dec_0_b", model.mean);
    archive.put_scalar("noise_var", model.noise_var);
    archive.put_scalar("prior_var", model.prior_var);
  } else {
    archive.put_vector("mean", model.mean);
    archive.put_scalar("data_scale", model.data_scale);
    for (std::size_t i = 0; i < model.encoder.size(); ++i) {
      archive.put_matrix(layer_name("enc_%zu_w", i), model.encoder[i].w);
      archive.put_vector(layer_name("enc_%zu_b", i), model.encoder[i].b);
    }
    for (std::size_t i = 0; i < model.decoder.size(); ++i) {
      archive.put_matrix(layer_name("dec_%zu_w", i), model.decoder[i].w);
      archive.put_vector(layer_name("dec_%zu_b", i), model.decoder[i].b);
    }
  }
  archive.save(path);
}

LatentModel load_latent_model(const std::filesystem::path & path)
{
  const TensorArchive archive = TensorArchive::load(path);
  LatentModel model;
  model.templ = template_from_archive(archive);
  const double variant = archive.scalar("variant");
  if (variant == 0.0) {
    model.variant = LatentVariant::Linear;
    model.weights = archive.matrix("dec_0_w");
    model.mean = archive.vector("dec_0_b");
    model.noise_var = archive.scalar("noise_var");
    model.prior_var = archive.scalar("prior_var");
  } else if (variant == 1.0) {
    model.variant = LatentVariant::Mlp;
    model.mean = archive.vector("mean");
    model.data_scale = archive.scalar("data_scale");
    for (std::size_t i = 0; archive.contains(layer_name("enc_%zu_w", i)); ++i) {
      model.encoder.push_back({archive.matrix(layer_name("enc_%zu_w", i)), archive.vector(layer_name("enc_%zu_b", i))});
    }
    for (std::size_t i = 0; archive.contains(layer_name("dec_%zu_w", i)); ++i) {
      model.decoder.push_back({archive.matrix(layer_name("dec_%zu_w", i)), archive.vector(layer_name("dec_%zu_b", i))});
    }
  } else {
    throw InputError(path.string() + ": unknown latent model variant " + std::to_string(variant));
  }
  model.validate();
  return model;
}

}  // namespace divface
