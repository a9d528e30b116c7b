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
#include "divface/tensor_io.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cstdio>

namespace divface
{

namespace
{

// Deterministic sign: the largest-magnitude entry of every column is positive.
void canonicalize_signs(Eigen::MatrixXd & basis)
{
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0.0) {
      basis.col(c) *= -1.0;
    }
  }
}

std::string region_name(const char * fmt, std::size_t r)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, r);
  return buf;
}

std::vector<Eigen::Index> region_coordinates(const VertexMask & mask)
{
  std::vector<Eigen::Index> coords;
  for (int v : mask.indices()) {
    for (int k = 0; k < 3; ++k) {
      coords.push_back(3 * static_cast<Eigen::Index>(v) + k);
    }
  }
  return coords;
}

}  // namespace

PcaBasis principal_components(const Eigen::MatrixXd & data, int rank, bool center, bool allow_degenerate)
{
  const Eigen::Index dim = data.rows();
  const Eigen::Index n = data.cols();
  require(rank >= 0, "PCA rank must be non-negative");
  if (n == 0 || rank > std::min(dim, n)) {
    throw InputError("insufficient data for PCA: rank " + std::to_string(rank) + " from " +
                     std::to_string(n) + " samples of dimension " + std::to_string(dim));
  }
  Eigen::MatrixXd centered = data;
  if (center) {
    centered.colwise() -= data.rowwise().mean();
  }
  // SVD of the n x D sample matrix; right singular vectors are the directions.
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered.transpose(), Eigen::ComputeThinV);
  const Eigen::VectorXd & s = svd.singularValues();
  if (!allow_degenerate && rank > 0) {
    const double top = s.size() > 0 ? s[0] : 0.0;
    if (!(top > 0.0) || s[rank - 1] <= 1e-9 * top) {
      throw InputError("insufficient data for PCA: requested rank " + std::to_string(rank) +
                       " exceeds the numerical rank of the data");
    }
  }
  const double denom = static_cast<double>(center && n > 1 ? n - 1 : n);
  PcaBasis out;
  out.basis = svd.matrixV().leftCols(rank);
  canonicalize_signs(out.basis);
  out.eigenvalues = s.head(rank).array().square() / denom;
  return out;
}

void BlendshapeModel::validate() const
{
  const Eigen::Index dim = global.shape_basis.rows();
  require(dim == 3 * static_cast<Eigen::Index>(global.templ.num_vertices()), "global basis size mismatch");
  require(global.expr_basis.rows() == dim, "expression basis size mismatch");
  require(coarse.shape >= 0 && coarse.shape <= global.n_shape(), "coarse shape rank exceeds global rank");
  require(coarse.expr >= 0 && coarse.expr <= global.n_expr(), "coarse expression rank exceeds global rank");
  require(local.shape.size() == local.atlas.size() && local.expr.size() == local.atlas.size(),
    "local model count does not match the atlas");
  for (std::size_t r = 0; r < local.shape.size(); ++r) {
    require(local.shape[r].rows() == dim && local.expr[r].rows() == dim, "local basis size mismatch");
  }
}

ModelParams ModelParams::zeros(const BlendshapeModel & model)
{
  ModelParams p;
  p.shape = Eigen::VectorXd::Zero(model.coarse.shape);
  p.expr = Eigen::VectorXd::Zero(model.coarse.expr);
  for (std::size_t r = 0; r < model.num_regions(); ++r) {
    p.region_shape.push_back(Eigen::VectorXd::Zero(model.region_shape_rank(r)));
    p.region_expr.push_back(Eigen::VectorXd::Zero(model.region_expr_rank(r)));
  }
  return p;
}

GlobalModel train_global(const TrainingCorpus & corpus, int n_shape, int n_expr)
{
  require(!corpus.meshes.empty(), "train_global: empty corpus");
  require(corpus.subject.size() == corpus.meshes.size(), "train_global: subject tag per mesh required");
  const auto subjects = corpus.neutral_index.size();
  if (static_cast<int>(subjects) <= n_shape) {
    throw InputError("insufficient data: " + std::to_string(subjects) + " subjects for " +
                     std::to_string(n_shape) + " shape components");
  }
  const Mesh & first = corpus.meshes.front();
  const auto dim = 3 * static_cast<Eigen::Index>(first.num_vertices());

  Eigen::MatrixXd neutrals(dim, static_cast<Eigen::Index>(subjects));
  for (std::size_t s = 0; s < subjects; ++s) {
    const int idx = corpus.neutral_index[s];
    require(idx >= 0 && static_cast<std::size_t>(idx) < corpus.meshes.size(), "bad neutral index");
    require(corpus.meshes[static_cast<std::size_t>(idx)].num_vertices() == first.num_vertices(),
      "train_global: vertex count mismatch");
    neutrals.col(static_cast<Eigen::Index>(s)) = corpus.meshes[static_cast<std::size_t>(idx)].flat_view();
  }
  const Eigen::VectorXd mean = neutrals.rowwise().mean();

  Eigen::MatrixXd residuals(dim, static_cast<Eigen::Index>(corpus.meshes.size()));
  for (std::size_t i = 0; i < corpus.meshes.size(); ++i) {
    const auto & mesh = corpus.meshes[i];
    require(mesh.num_vertices() == first.num_vertices(), "train_global: vertex count mismatch");
    const int subj = corpus.subject[i];
    require(subj >= 0 && static_cast<std::size_t>(subj) < subjects, "bad subject id");
    residuals.col(static_cast<Eigen::Index>(i)) =
      mesh.flat_view() - corpus.meshes[static_cast<std::size_t>(corpus.neutral_index[static_cast<std::size_t>(subj)])].flat_view();
  }

  PcaBasis shape = principal_components(neutrals, n_shape, true);
  PcaBasis expr = principal_components(residuals, n_expr, false);
  return GlobalModel{
    first.with_flat(mean), std::move(shape.basis), std::move(expr.basis),
    std::move(shape.eigenvalues), std::move(expr.eigenvalues)};
}

GlobalCoefficients fit_global_params(const GlobalModel & model, const Mesh & target)
{
  require(target.num_vertices() == model.templ.num_vertices(), "fit_global_params: vertex count mismatch");
  const Eigen::Index ns = model.n_shape();
  const Eigen::Index ne = model.n_expr();
  Eigen::MatrixXd basis(model.shape_basis.rows(), ns + ne);
  basis << model.shape_basis, model.expr_basis;
  const Eigen::VectorXd delta = target.flat_view() - model.templ.flat_view();
  const Eigen::VectorXd coeffs = basis.colPivHouseholderQr().solve(delta);
  return {coeffs.head(ns), coeffs.tail(ne)};
}

Eigen::VectorXd coarse_flat(
  const GlobalModel & model, const Eigen::VectorXd & shape, const Eigen::VectorXd & expr,
  int n_shape, int n_expr)
{
  require(n_shape <= model.n_shape() && n_expr <= model.n_expr(), "coarse rank exceeds model rank");
  require(shape.size() >= n_shape && expr.size() >= n_expr, "too few coefficients for the coarse ranks");
  Eigen::VectorXd out = model.templ.flat();
  out.noalias() += model.shape_basis.leftCols(n_shape) * shape.head(n_shape);
  out.noalias() += model.expr_basis.leftCols(n_expr) * expr.head(n_expr);
  return out;
}

Mesh coarse_reconstruct(const BlendshapeModel & model, const Eigen::VectorXd & shape, const Eigen::VectorXd & expr)
{
  return model.global.templ.with_flat(
    coarse_flat(model.global, shape, expr, model.coarse.shape, model.coarse.expr));
}

LocalModels train_local(
  const GlobalModel & model, const std::vector<Mesh> & dataset, const RegionAtlas & atlas,
  CoarseRanks coarse, LocalRanks local, LocalTrainOptions options)
{
  require(!dataset.empty(), "train_local: empty dataset");
  require(coarse.shape <= model.n_shape() && coarse.expr <= model.n_expr(),
    "train_local: coarse ranks exceed the global model");
  require(atlas.num_vertices() == model.templ.num_vertices(), "train_local: atlas size mismatch");
  const auto dim = 3 * static_cast<Eigen::Index>(model.templ.num_vertices());
  const auto n = static_cast<Eigen::Index>(dataset.size());

  Eigen::MatrixXd shape_res(dim, n);
  Eigen::MatrixXd expr_res(dim, n);
  const VertexMask all(model.templ.num_vertices(), true);
  for (Eigen::Index i = 0; i < n; ++i) {
    Mesh sample = dataset[static_cast<std::size_t>(i)];
    if (options.unpose) {
      sample = procrustes_align(sample, model.templ, all).apply(sample);
    }
    const GlobalCoefficients c = fit_global_params(model, sample);
    // Identity residual keeps every expression component; expression residual
    // keeps every identity component.
    shape_res.col(i) = sample.flat_view() - coarse_flat(model, c.shape, c.expr, coarse.shape, model.n_expr());
    expr_res.col(i) = sample.flat_view() - coarse_flat(model, c.shape, c.expr, model.n_shape(), coarse.expr);
  }

  LocalModels out{atlas, {}, {}, {}, {}};
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    const auto coords = region_coordinates(atlas[r].mask);
    const auto rows = static_cast<Eigen::Index>(coords.size());
    if (local.shape > std::min(rows, n) || local.expr > std::min(rows, n)) {
      throw InputError("insufficient data for region " + atlas[r].name + ": " + std::to_string(n) +
                       " samples over " + std::to_string(rows) + " coordinates");
    }
    Eigen::MatrixXd sub_shape(rows, n);
    Eigen::MatrixXd sub_expr(rows, n);
    for (Eigen::Index k = 0; k < rows; ++k) {
      sub_shape.row(k) = shape_res.row(coords[static_cast<std::size_t>(k)]);
      sub_expr.row(k) = expr_res.row(coords[static_cast<std::size_t>(k)]);
    }
    PcaBasis ps = principal_components(sub_shape, local.shape, false, true);
    PcaBasis pe = principal_components(sub_expr, local.expr, false, true);
    Eigen::MatrixXd full_shape = Eigen::MatrixXd::Zero(dim, local.shape);
    Eigen::MatrixXd full_expr = Eigen::MatrixXd::Zero(dim, local.expr);
    for (Eigen::Index k = 0; k < rows; ++k) {
      full_shape.row(coords[static_cast<std::size_t>(k)]) = ps.basis.row(k);
      full_expr.row(coords[static_cast<std::size_t>(k)]) = pe.basis.row(k);
    }
    out.shape.push_back(std::move(full_shape));
    out.expr.push_back(std::move(full_expr));
    out.shape_eigenvalues.push_back(std::move(ps.eigenvalues));
    out.expr_eigenvalues.push_back(std::move(pe.eigenvalues));
  }
  return out;
}

Eigen::VectorXd evaluate_unposed(const BlendshapeModel & model, const ModelParams & params)
{
  require(params.shape.size() == model.coarse.shape, "evaluate: identity coefficient count mismatch");
  require(params.expr.size() == model.coarse.expr, "evaluate: expression coefficient count mismatch");
  require(params.region_shape.size() == model.num_regions() && params.region_expr.size() == model.num_regions(),
    "evaluate: region coefficient count mismatch");
  Eigen::VectorXd out = coarse_flat(model.global, params.shape, params.expr, model.coarse.shape, model.coarse.expr);
  for (std::size_t r = 0; r < model.num_regions(); ++r) {
    require(params.region_shape[r].size() == model.region_shape_rank(static_cast<std::size_t>(r)) &&
              params.region_expr[r].size() == model.region_expr_rank(static_cast<std::size_t>(r)),
      "evaluate: local coefficient count mismatch in region " + std::to_string(r));
    out.noalias() += model.local.shape[r] * params.region_shape[r];
    out.noalias() += model.local.expr[r] * params.region_expr[r];
  }
  return out;
}

Mesh evaluate(const BlendshapeModel & model, const ModelParams & params)
{
  const Mesh unposed = model.global.templ.with_flat(evaluate_unposed(model, params));
  return params.rigid.apply(unposed);
}

void save_model(const BlendshapeModel & model, const std::filesystem::path & path)
{
  model.validate();
  TensorArchive archive;
  const Mesh & templ = model.global.templ;
  put_template(archive, templ);
  archive.put_matrix("shape_basis", model.global.shape_basis);
  archive.put_matrix("expr_basis", model.global.expr_basis);
  archive.put_vector("shape_eig", model.global.shape_eigenvalues);
  archive.put_vector("expr_eig", model.global.expr_eigenvalues);
  archive.put_vector("coarse_ranks", Eigen::Vector2d(model.coarse.shape, model.coarse.expr));
  for (std::size_t r = 0; r < model.num_regions(); ++r) {
    const VertexMask & mask = model.local.atlas[r].mask;
    Eigen::VectorXd m(static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i) {
      m[static_cast<Eigen::Index>(i)] = mask[i] ? 1.0 : 0.0;
    }
    archive.put_vector(region_name("region_%02zu_mask", r), m);
    archive.put_matrix(region_name("region_%02zu_shape", r), model.local.shape[r]);
    archive.put_matrix(region_name("region_%02zu_expr", r), model.local.expr[r]);
    archive.put_vector(region_name("region_%02zu_shape_eig", r), model.local.shape_eigenvalues[r]);
    archive.put_vector(region_name("region_%02zu_expr_eig", r), model.local.expr_eigenvalues[r]);
  }
  archive.save(path);
}

BlendshapeModel load_model(const std::filesystem::path & path)
{
  const TensorArchive archive = TensorArchive::load(path);
  Mesh templ = template_from_archive(archive);
  const auto n = templ.num_vertices();
  GlobalModel global{
    std::move(templ), archive.matrix("shape_basis"), archive.matrix("expr_basis"),
    archive.vector("shape_eig"), archive.vector("expr_eig")};
  const Eigen::VectorXd ranks = archive.vector("coarse_ranks");
  require(ranks.size() == 2, "coarse_ranks must hold two entries");

  std::vector<Region> regions;
  std::vector<Eigen::MatrixXd> shape;
  std::vector<Eigen::MatrixXd> expr;
  std::vector<Eigen::VectorXd> shape_eig;
  std::vector<Eigen::VectorXd> expr_eig;
  for (std::size_t r = 0; archive.contains(region_name("region_%02zu_mask", r)); ++r) {
    const Eigen::VectorXd m = archive.vector(region_name("region_%02zu_mask", r));
    require(static_cast<std::size_t>(m.size()) == n, "region mask length mismatch");
    VertexMask mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      mask.set(i, m[static_cast<Eigen::Index>(i)] != 0.0);
    }
    regions.push_back({region_name("region_%02zu", r), std::move(mask)});
    shape.push_back(archive.matrix(region_name("region_%02zu_shape", r)));
    expr.push_back(archive.matrix(region_name("region_%02zu_expr", r)));
    shape_eig.push_back(archive.vector(region_name("region_%02zu_shape_eig", r)));
    expr_eig.push_back(archive.vector(region_name("region_%02zu_expr_eig", r)));
  }
  BlendshapeModel model{
    std::move(global),
    LocalModels{RegionAtlas(std::move(regions)), std::move(shape), std::move(expr), std::move(shape_eig),
      std::move(expr_eig)},
    CoarseRanks{static_cast<int>(ranks[0]), static_cast<int>(ranks[1])}};
  model.validate();
  return model;
}

}  // namespace divface
