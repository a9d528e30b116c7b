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

#include "divface/fitter.hpp"

#include "divface/error.hpp"
#include "divface/synthetic.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace divface
{

namespace
{

Eigen::Matrix3d skew(const Eigen::Vector3d & v)
{
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

// Residuals within rounding of zero count as exact fits.
double sign0(double x)
{
  constexpr double kZero = 1e-12;
  return x > kZero ? 1.0 : (x < -kZero ? -1.0 : 0.0);
}

}  // namespace

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d & w)
{
  const double theta = w.norm();
  if (theta < 1e-12) {
    return Eigen::Matrix3d::Identity() + skew(w);
  }
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

std::array<Eigen::Matrix3d, 3> rotation_jacobian(const Eigen::Vector3d & w)
{
  std::array<Eigen::Matrix3d, 3> out;
  const double theta2 = w.squaredNorm();
  if (theta2 < 1e-14) {
    // second-order expansion around the identity
    for (int i = 0; i < 3; ++i) {
      const Eigen::Matrix3d ei = skew(Eigen::Vector3d::Unit(i));
      out[static_cast<std::size_t>(i)] = ei + 0.5 * (ei * skew(w) + skew(w) * ei);
    }
    return out;
  }
  const Eigen::Matrix3d r = rotation_from_axis_angle(w);
  const Eigen::Matrix3d wx = skew(w);
  const Eigen::Matrix3d i_minus_r = Eigen::Matrix3d::Identity() - r;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d cross = w.cross(i_minus_r.col(i));
    out[static_cast<std::size_t>(i)] = (w[i] * wx + skew(cross)) * r / theta2;
  }
  return out;
}

Eigen::Vector3d axis_angle_from_rotation(const Eigen::Matrix3d & r)
{
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Observation Observation::dense(Mesh target, VertexMask visibility, std::optional<VertexMask> occlusion)
{
  require(visibility.size() == target.num_vertices(), "dense observation: visibility mask size mismatch");
  if (occlusion) {
    require(occlusion->size() == target.num_vertices(), "dense observation: occlusion mask size mismatch");
  }
  Observation obs;
  obs.mode = ObservationMode::Dense;
  obs.target = std::move(target);
  obs.visibility = std::move(visibility);
  obs.occlusion = std::move(occlusion);
  return obs;
}

Observation Observation::sparse(Landmarks2d landmarks, Eigen::VectorXd confidences, std::optional<VertexMask> occlusion)
{
  require(landmarks.rows() == kNumLandmarks, "sparse observation needs exactly 68 landmarks, got " +
                                               std::to_string(landmarks.rows()));
  require(confidences.size() == kNumLandmarks, "sparse observation needs 68 confidences");
  for (double c : confidences) {
    require(c >= 0.0 && c <= 1.0, "landmark confidences must lie in [0, 1]");
  }
  Observation obs;
  obs.mode = ObservationMode::Sparse;
  obs.landmarks = std::move(landmarks);
  obs.confidences = std::move(confidences);
  obs.occlusion = std::move(occlusion);
  return obs;
}

VertexMask Observation::visible_vertices() const
{
  require(mode == ObservationMode::Dense, "visible_vertices: dense observations only");
  return occlusion ? visibility & occlusion->complement() : visibility;
}

Observation load_landmarks(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open landmark file " + path.string());
  }
  Landmarks2d lm(kNumLandmarks, 2);
  Eigen::VectorXd conf(kNumLandmarks);
  std::string line;
  int row = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    std::string a, b, c, extra;
    if (!(ss >> a)) {
      continue;
    }
    if (!(ss >> b >> c) || (ss >> extra)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected `x y confidence`");
    }
    if (row >= kNumLandmarks) {
      throw InputError(path.string() + ": more than 68 landmarks");
    }
    double vals[3];
    const std::string * toks[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const auto & t = *toks[k];
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), vals[k]);
      if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + t + "'");
      }
    }
    lm(row, 0) = vals[0];
    lm(row, 1) = vals[1];
    conf[row] = vals[2];
    ++row;
  }
  if (row != kNumLandmarks) {
    throw InputError(path.string() + ": expected 68 landmarks, found " + std::to_string(row));
  }
  return Observation::sparse(std::move(lm), std::move(conf));
}

void Camera::validate() const
{
  RigidTransform{rotation, Eigen::Vector3d::Zero(), scale}.validate();
}

Landmarks2d project_weak_perspective(const Vertices & points, const Camera & camera)
{
  camera.validate();
  Landmarks2d out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::Vector3d rx = camera.rotation * points.row(i).transpose();
    out.row(i) = (camera.scale * rx.head<2>() + camera.translation).transpose();
  }
  return out;
}

std::vector<bool> select_visible_landmarks(const Eigen::VectorXd & confidences, double tau)
{
  std::vector<bool> out(static_cast<std::size_t>(confidences.size()));
  for (Eigen::Index i = 0; i < confidences.size(); ++i) {
    require(confidences[i] >= 0.0 && confidences[i] <= 1.0, "landmark confidences must lie in [0, 1]");
    out[static_cast<std::size_t>(i)] = confidences[i] > tau;
  }
  return out;
}

void FitHyper::validate() const
{
  require(tau > 0.0 && tau < 1.0, "fit: tau must lie in (0, 1)");
  require(n_iter >= 1, "fit: n_iter must be >= 1");
  require(lambda_landmark >= 0.0 && lambda_data >= 0.0 && lambda_reg >= 0.0, "fit: loss weights must be >= 0");
  require(eta > 0.0, "fit: eta must be positive");
  require(rigid_unit > 0.0, "fit: rigid_unit must be positive");
}

FittingProblem::FittingProblem(const BlendshapeModel & model, const Observation & obs, const FitHyper & hyper)
: model_(model), obs_(obs), hyper_(hyper)
{
  model_.validate();
  const std::size_t n = model.global.templ.num_vertices();
  landmark_vertex_ = landmark_vertices(model.global.templ);
  if (obs.mode == ObservationMode::Dense) {
    require(obs.target.has_value(), "dense observation without a target mesh");
    require(obs.target->num_vertices() == n, "observation vertex count does not match the model");
    const VertexMask vis = obs.visible_vertices();
    visible_ = vis.indices();
    for (int v : landmark_vertex_) {
      landmark_valid_.push_back(vis[static_cast<std::size_t>(v)]);
    }
  } else {
    require(obs.landmarks.rows() == kNumLandmarks, "sparse observation needs 68 landmarks");
    landmark_valid_ = select_visible_landmarks(obs.confidences, hyper.tau);
    if (obs.occlusion) {
      require(obs.occlusion->size() == n, "occlusion mask size mismatch");
      for (std::size_t l = 0; l < landmark_vertex_.size(); ++l) {
        if ((*obs.occlusion)[static_cast<std::size_t>(landmark_vertex_[l])]) {
          landmark_valid_[l] = false;
        }
      }
    }
  }

  coarse_basis_.resize(model.global.shape_basis.rows(), model.coarse.shape + model.coarse.expr);
  coarse_basis_ << model.global.shape_basis.leftCols(model.coarse.shape),
    model.global.expr_basis.leftCols(model.coarse.expr);
  num_coeffs_ = coarse_basis_.cols();
  for (std::size_t r = 0; r < model.num_regions(); ++r) {
    std::vector<Eigen::Index> coords;
    for (int v : model.local.atlas[r].mask.indices()) {
      for (int k = 0; k < 3; ++k) {
        coords.push_back(3 * static_cast<Eigen::Index>(v) + k);
      }
    }
    const auto rs = model.local.shape[r].cols();
    const auto re = model.local.expr[r].cols();
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(coords.size()), rs + re);
    for (std::size_t k = 0; k < coords.size(); ++k) {
      basis.row(static_cast<Eigen::Index>(k)) << model.local.shape[r].row(coords[k]), model.local.expr[r].row(coords[k]);
    }
    num_coeffs_ += rs + re;
    region_coords_.push_back(std::move(coords));
    region_basis_.push_back(std::move(basis));
  }
  num_params_ = num_coeffs_ + 7;
}

Eigen::VectorXd FittingProblem::pack(const ModelParams & params) const
{
  Eigen::VectorXd p(num_params_);
  Eigen::Index o = 0;
  p.segment(o, params.shape.size()) = params.shape;
  o += params.shape.size();
  p.segment(o, params.expr.size()) = params.expr;
  o += params.expr.size();
  for (std::size_t r = 0; r < params.region_shape.size(); ++r) {
    p.segment(o, params.region_shape[r].size()) = params.region_shape[r];
    o += params.region_shape[r].size();
    p.segment(o, params.region_expr[r].size()) = params.region_expr[r];
    o += params.region_expr[r].size();
  }
  require(o == num_coeffs_, "pack: coefficient layout mismatch");
  const double unit = hyper_.rigid_unit;
  p.segment<3>(o) = axis_angle_from_rotation(params.rigid.rotation) / unit;
  p.segment<3>(o + 3) = params.rigid.translation / unit;
  p[o + 6] = std::log(params.rigid.scale) / unit;
  return p;
}

ModelParams FittingProblem::unpack(const Eigen::VectorXd & p) const
{
  require(p.size() == num_params_, "unpack: parameter vector length mismatch");
  ModelParams out;
  Eigen::Index o = 0;
  out.shape = p.segment(o, model_.coarse.shape);
  o += model_.coarse.shape;
  out.expr = p.segment(o, model_.coarse.expr);
  o += model_.coarse.expr;
  for (std::size_t r = 0; r < model_.num_regions(); ++r) {
    out.region_shape.push_back(p.segment(o, model_.region_shape_rank(r)));
    o += model_.region_shape_rank(r);
    out.region_expr.push_back(p.segment(o, model_.region_expr_rank(r)));
    o += model_.region_expr_rank(r);
  }
  const double unit = hyper_.rigid_unit;
  out.rigid.rotation = rotation_from_axis_angle(unit * p.segment<3>(o));
  out.rigid.translation = unit * p.segment<3>(o + 3);
  out.rigid.scale = std::exp(unit * p[o + 6]);
  return out;
}

LossTerms FittingProblem::evaluate(const Eigen::VectorXd & p, Eigen::VectorXd * gradient) const
{
  require(p.size() == num_params_, "fitting loss: parameter vector length mismatch");
  const double unit = hyper_.rigid_unit;
  const Eigen::Index o = num_coeffs_;
  const Eigen::Vector3d w = unit * p.segment<3>(o);
  const Eigen::Vector3d t = unit * p.segment<3>(o + 3);
  const double scale = std::exp(unit * p[o + 6]);
  const Eigen::Matrix3d rot = rotation_from_axis_angle(w);

  // Unposed shape
  Eigen::VectorXd x = model_.global.templ.flat();
  const Eigen::Index nc = coarse_basis_.cols();
  x.noalias() += coarse_basis_ * p.head(nc);
  Eigen::Index off = nc;
  for (std::size_t r = 0; r < region_basis_.size(); ++r) {
    const auto k = region_basis_[r].cols();
    const Eigen::VectorXd local = region_basis_[r] * p.segment(off, k);
    for (std::size_t c = 0; c < region_coords_[r].size(); ++c) {
      x[region_coords_[r][c]] += local[static_cast<Eigen::Index>(c)];
    }
    off += k;
  }
  const auto n = static_cast<Eigen::Index>(model_.global.templ.num_vertices());
  auto vertex = [&](Eigen::Index v) -> Eigen::Vector3d { return x.segment<3>(3 * v); };

  LossTerms terms;
  // d loss / d posed vertex; z stays zero for image-plane residuals
  Eigen::MatrixXd g_posed;
  std::vector<Eigen::Index> touched;
  if (gradient) {
    g_posed = Eigen::MatrixXd::Zero(3, n);
  }
  auto accumulate = [&](Eigen::Index v, const Eigen::Vector3d & g) {
    if (gradient) {
      g_posed.col(v) += g;
      touched.push_back(v);
    }
  };

  std::size_t n_valid = 0;
  for (bool b : landmark_valid_) {
    n_valid += b ? 1 : 0;
  }
  if (obs_.mode == ObservationMode::Dense) {
    const Vertices & target = obs_.target->vertices();
    if (n_valid > 0 && hyper_.lambda_landmark != 0.0) {
      const double wgt = 1.0 / static_cast<double>(n_valid);
      for (std::size_t l = 0; l < landmark_vertex_.size(); ++l) {
        if (!landmark_valid_[l]) {
          continue;
        }
        const Eigen::Index v = landmark_vertex_[l];
        const Eigen::Vector3d d = scale * rot * vertex(v) + t - target.row(v).transpose();
        terms.landmark += wgt * d.cwiseAbs().sum();
        accumulate(v, hyper_.lambda_landmark * wgt * d.unaryExpr(&sign0));
      }
    }
    if (!visible_.empty() && hyper_.lambda_data != 0.0) {
      const double wgt = 1.0 / static_cast<double>(visible_.size());
      for (int vi : visible_) {
        const Eigen::Index v = vi;
        const Eigen::Vector3d d = scale * rot * vertex(v) + t - target.row(v).transpose();
        terms.data += wgt * d.cwiseAbs().sum();
        accumulate(v, hyper_.lambda_data * wgt * d.unaryExpr(&sign0));
      }
    }
  } else if (n_valid > 0 && hyper_.lambda_landmark != 0.0) {
    const double wgt = 1.0 / static_cast<double>(n_valid);
    for (std::size_t l = 0; l < landmark_vertex_.size(); ++l) {
      if (!landmark_valid_[l]) {
        continue;
      }
      const Eigen::Index v = landmark_vertex_[l];
      const Eigen::Vector3d posed = scale * rot * vertex(v) + t;
      const Eigen::Vector2d d = posed.head<2>() - obs_.landmarks.row(static_cast<Eigen::Index>(l)).transpose();
      terms.landmark += wgt * d.cwiseAbs().sum();
      accumulate(v, hyper_.lambda_landmark * wgt * Eigen::Vector3d(sign0(d.x()), sign0(d.y()), 0.0));
    }
  }
  terms.reg = p.head(num_coeffs_).squaredNorm();
  terms.total = hyper_.lambda_landmark * terms.landmark + hyper_.lambda_data * terms.data + hyper_.lambda_reg * terms.reg;

  if (gradient) {
    gradient->setZero(num_params_);
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(3 * n);
    Eigen::Matrix3d g_rot = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g_t = Eigen::Vector3d::Zero();
    double g_scale = 0.0;
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (Eigen::Index v : touched) {
      const Eigen::Vector3d g = g_posed.col(v);
      const Eigen::Vector3d xv = vertex(v);
      gx.segment<3>(3 * v) = scale * rot.transpose() * g;
      g_rot += scale * g * xv.transpose();
      g_t += g;
      g_scale += g.dot(rot * xv);
    }
    gradient->head(nc) = coarse_basis_.transpose() * gx;
    off = nc;
    for (std::size_t r = 0; r < region_basis_.size(); ++r) {
      const auto k = region_basis_[r].cols();
      Eigen::VectorXd sub(static_cast<Eigen::Index>(region_coords_[r].size()));
      for (std::size_t c = 0; c < region_coords_[r].size(); ++c) {
        sub[static_cast<Eigen::Index>(c)] = gx[region_coords_[r][c]];
      }
      gradient->segment(off, k) = region_basis_[r].transpose() * sub;
      off += k;
    }
    gradient->head(num_coeffs_) += 2.0 * hyper_.lambda_reg * p.head(num_coeffs_);
    const auto d_rot = rotation_jacobian(w);
    for (int i = 0; i < 3; ++i) {
      (*gradient)[o + i] = unit * g_rot.cwiseProduct(d_rot[static_cast<std::size_t>(i)]).sum();
    }
    gradient->segment<3>(o + 3) = unit * g_t;
    (*gradient)[o + 6] = unit * scale * g_scale;
  }
  return terms;
}

LossTerms fitting_loss(
  const BlendshapeModel & model, const ModelParams & params, const Observation & obs, const FitHyper & hyper,
  Eigen::VectorXd * gradient)
{
  const FittingProblem problem(model, obs, hyper);
  return problem.evaluate(problem.pack(params), gradient);
}

FitResult fit_partial(const BlendshapeModel & model, const Observation & obs, const FitHyper & hyper)
{
  hyper.validate();
  const FittingProblem problem(model, obs, hyper);
  Eigen::VectorXd p = problem.pack(ModelParams::zeros(model));
  Eigen::VectorXd grad;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(hyper.n_iter) + 1);
  double initial = 0.0;
  for (int it = 0; it <= hyper.n_iter; ++it) {
    const LossTerms terms = problem.evaluate(p, it < hyper.n_iter ? &grad : nullptr);
    if (it == 0) {
      initial = terms.total;
    }
    if (!std::isfinite(terms.total) || terms.total > 1e6 * std::max(initial, 1e-300)) {
      throw NumericError("fit diverged at iteration " + std::to_string(it) + " (loss " +
                         std::to_string(terms.total) + ")");
    }
    trace.push_back(terms.total);
    if (it < hyper.n_iter) {
      p -= hyper.eta * grad;
    }
  }
  ModelParams params = problem.unpack(p);
  FitResult result{
    obs.mode == ObservationMode::Dense ? evaluate(model, params)
                                       : model.global.templ.with_flat(evaluate_unposed(model, params)),
    params, Camera{}, std::move(trace), problem.landmark_valid()};
  result.camera.rotation = params.rigid.rotation;
  result.camera.translation = params.rigid.translation.head<2>();
  result.camera.scale = params.rigid.scale;
  result.params = std::move(params);
  return result;
}

BlendshapeModel global_only(const BlendshapeModel & model)
{
  BlendshapeModel out = model;
  out.coarse = CoarseRanks{model.global.n_shape(), model.global.n_expr()};
  const auto dim = model.global.shape_basis.rows();
  for (std::size_t r = 0; r < out.num_regions(); ++r) {
    out.local.shape[r] = Eigen::MatrixXd(dim, 0);
    out.local.expr[r] = Eigen::MatrixXd(dim, 0);
    out.local.shape_eigenvalues[r] = Eigen::VectorXd();
    out.local.expr_eigenvalues[r] = Eigen::VectorXd();
  }
  return out;
}

}  // namespace divface
