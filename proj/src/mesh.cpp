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

#include "divface/mesh.hpp"

#include "divface/error.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

namespace divface
{

Mesh::Mesh(Vertices vertices, Faces faces) : vertices_(std::move(vertices)), faces_(std::move(faces))
{
  require(vertices_.rows() > 0, "mesh has no vertices");
  const int n = static_cast<int>(vertices_.rows());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face & face = faces_[f];
    for (int idx : face) {
      require(idx >= 0 && idx < n, "face " + std::to_string(f) + " references vertex " +
                                     std::to_string(idx) + " outside [0, " + std::to_string(n) + ")");
    }
    require(face[0] != face[1] && face[1] != face[2] && face[0] != face[2],
      "face " + std::to_string(f) + " is degenerate");
  }
}

Mesh Mesh::from_flat(const Eigen::VectorXd & flat, Faces faces)
{
  require(flat.size() % 3 == 0, "flat coordinate vector length is not a multiple of 3");
  Vertices v = Eigen::Map<const Vertices>(flat.data(), flat.size() / 3, 3);
  return {std::move(v), std::move(faces)};
}

Eigen::VectorXd Mesh::flat() const
{
  return flat_view();
}

Mesh Mesh::with_vertices(Vertices vertices) const
{
  require(vertices.rows() == vertices_.rows(), "vertex count mismatch");
  return {std::move(vertices), faces_};
}

Mesh Mesh::with_flat(const Eigen::VectorXd & flat) const
{
  require(flat.size() == vertices_.size(), "flat coordinate vector does not match vertex count");
  return from_flat(flat, faces_);
}

std::size_t VertexMask::count() const
{
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), 1));
}

std::vector<int> VertexMask::indices() const
{
  std::vector<int> out;
  out.reserve(count());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (flags_[i]) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

VertexMask VertexMask::complement() const
{
  VertexMask out(flags_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    out.flags_[i] = flags_[i] ? 0 : 1;
  }
  return out;
}

VertexMask VertexMask::operator&(const VertexMask & other) const
{
  require(other.size() == size(), "mask size mismatch");
  VertexMask out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.flags_[i] = (flags_[i] && other.flags_[i]) ? 1 : 0;
  }
  return out;
}

VertexMask VertexMask::operator|(const VertexMask & other) const
{
  require(other.size() == size(), "mask size mismatch");
  VertexMask out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    out.flags_[i] = (flags_[i] || other.flags_[i]) ? 1 : 0;
  }
  return out;
}

Eigen::VectorXd VertexMask::coordinate_weights() const
{
  Eigen::VectorXd w(3 * static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    w.segment<3>(3 * static_cast<Eigen::Index>(i)).setConstant(flags_[i] ? 1.0 : 0.0);
  }
  return w;
}

RegionAtlas::RegionAtlas(std::vector<Region> regions) : regions_(std::move(regions))
{
  require(regions_.size() == kNumRegions,
    "region atlas needs exactly 14 regions, got " + std::to_string(regions_.size()));
  const std::size_t n = regions_.front().mask.size();
  VertexMask covered(n);
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    require(regions_[i].mask.size() == n, "region masks differ in length");
    for (std::size_t j = 0; j < i; ++j) {
      require(regions_[i].name != regions_[j].name, "duplicate region name " + regions_[i].name);
    }
    covered = covered | regions_[i].mask;
  }
  require(covered.count() == n, "region atlas does not cover every vertex");
}

void RigidTransform::validate() const
{
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-10, "rotation is not orthonormal");
  require(rotation.determinant() > 0.0, "rotation has negative determinant");
  require(scale > 0.0, "scale must be positive");
}

Vertices RigidTransform::apply(const Vertices & v) const
{
  Vertices out = (scale * (v * rotation.transpose())).rowwise() + translation.transpose();
  return out;
}

Mesh RigidTransform::apply(const Mesh & mesh) const
{
  return mesh.with_vertices(apply(mesh.vertices()));
}

namespace
{

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s)
{
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
      ++i;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') {
      ++j;
    }
    if (j > i) {
      out.push_back(s.substr(i, j - i));
    }
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T & out)
{
  const char * end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void obj_error(const std::filesystem::path & path, std::size_t line, const std::string & what)
{
  throw InputError(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Mesh load_obj(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::vector<Eigen::Vector3d> positions;
  Faces faces;
  std::vector<std::size_t> face_lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto tokens = split_ws(line);
    const std::string_view tag = tokens.front();
    if (tag == "v") {
      if (tokens.size() != 4) {
        obj_error(path, line_no, "vertex record needs 3 coordinates");
      }
      Eigen::Vector3d p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_number(tokens[k + 1], p[k])) {
          obj_error(path, line_no, "bad vertex coordinate '" + std::string(tokens[k + 1]) + "'");
        }
      }
      positions.push_back(p);
    } else if (tag == "f") {
      if (tokens.size() != 4) {
        obj_error(path, line_no, "only triangular faces are supported");
      }
      Face face{};
      for (int k = 0; k < 3; ++k) {
        // v, v/vt, v//vn and v/vt/vn all start with the position index
        std::string_view tok = tokens[k + 1];
        tok = tok.substr(0, tok.find('/'));
        long idx = 0;
        if (!parse_number(tok, idx)) {
          obj_error(path, line_no, "bad face index '" + std::string(tokens[k + 1]) + "'");
        }
        face[k] = static_cast<int>(idx - 1);
      }
      faces.push_back(face);
      face_lines.push_back(line_no);
    } else if (tag == "vn" || tag == "vt" || tag == "o" || tag == "g" || tag == "s") {
      continue;
    } else {
      obj_error(path, line_no, "unsupported record '" + std::string(tag) + "'");
    }
  }
  if (positions.empty()) {
    throw InputError(path.string() + ": no vertices");
  }
  const int n = static_cast<int>(positions.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int idx : faces[f]) {
      if (idx < 0 || idx >= n) {
        obj_error(path, face_lines[f],
          "face index " + std::to_string(idx + 1) + " out of range [1, " + std::to_string(n) + "]");
      }
    }
    const Face & fc = faces[f];
    if (fc[0] == fc[1] || fc[1] == fc[2] || fc[0] == fc[2]) {
      obj_error(path, face_lines[f], "degenerate face");
    }
  }
  Vertices v(n, 3);
  for (int i = 0; i < n; ++i) {
    v.row(i) = positions[static_cast<std::size_t>(i)].transpose();
  }
  return {std::move(v), std::move(faces)};
}

void save_obj(const Mesh & mesh, const std::filesystem::path & path)
{
  std::string out;
  out.reserve(mesh.num_vertices() * 40 + mesh.num_faces() * 24);
  char buf[128];
  const Vertices & v = mesh.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const int len = std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", v(i, 0), v(i, 1), v(i, 2));
    out.append(buf, static_cast<std::size_t>(len));
  }
  for (const Face & f : mesh.faces()) {
    const int len = std::snprintf(buf, sizeof buf, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out.append(buf, static_cast<std::size_t>(len));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw InputError("cannot write " + path.string() + ": " + std::strerror(errno));
  }
  file << out;
  if (!file) {
    throw InputError("write failed for " + path.string());
  }
}

VertexMask load_mask(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::vector<unsigned char> flags;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) {
      continue;
    }
    if (line == "0" || line == "1") {
      flags.push_back(line == "1" ? 1 : 0);
    } else {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": mask lines must be 0 or 1");
    }
  }
  return VertexMask(std::move(flags));
}

void save_mask(const VertexMask & mask, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out << (mask[i] ? "1\n" : "0\n");
  }
}

std::vector<std::vector<int>> vertex_adjacency(const Mesh & mesh)
{
  std::vector<std::vector<int>> adj(mesh.num_vertices());
  for (const Face & f : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k];
      const int b = f[(k + 1) % 3];
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  }
  for (auto & nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

Eigen::SparseMatrix<double> graph_laplacian(const Mesh & mesh)
{
  const auto adj = vertex_adjacency(mesh);
  const auto n = static_cast<Eigen::Index>(adj.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto & nbrs = adj[static_cast<std::size_t>(i)];
    triplets.emplace_back(i, i, static_cast<double>(nbrs.size()));
    for (int j : nbrs) {
      triplets.emplace_back(i, j, -1.0);
    }
  }
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(triplets.begin(), triplets.end());
  return lap;
}

RigidTransform procrustes_align(
  const Mesh & source, const Mesh & target, const VertexMask & weights, ProcrustesOptions options)
{
  return procrustes_align(source.vertices(), target.vertices(), weights, options);
}

RigidTransform procrustes_align(
  const Vertices & source, const Vertices & target, const VertexMask & weights, ProcrustesOptions options)
{
  require(source.rows() == target.rows(), "procrustes: vertex count mismatch");
  require(static_cast<Eigen::Index>(weights.size()) == source.rows(), "procrustes: mask size mismatch");
  const std::vector<int> idx = weights.indices();
  if (idx.size() < 3) {
    throw InputError("procrustes: degenerate selection (fewer than 3 vertices)");
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixX3d src(m, 3);
  Eigen::MatrixX3d dst(m, 3);
  for (Eigen::Index r = 0; r < m; ++r) {
    src.row(r) = source.row(idx[static_cast<std::size_t>(r)]);
    dst.row(r) = target.row(idx[static_cast<std::size_t>(r)]);
  }
  const Eigen::RowVector3d mu_src = src.colwise().mean();
  const Eigen::RowVector3d mu_dst = dst.colwise().mean();
  src.rowwise() -= mu_src;
  dst.rowwise() -= mu_dst;

  const Eigen::JacobiSVD<Eigen::MatrixX3d> spread(src);
  const Eigen::Vector3d sv = spread.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw InputError("procrustes: degenerate selection (points are collinear)");
  }

  const Eigen::Matrix3d cov = dst.transpose() * src / static_cast<double>(m);
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d flip = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    flip[2] = -1.0;
  }
  RigidTransform out;
  out.rotation = svd.matrixU() * flip.asDiagonal() * svd.matrixV().transpose();
  if (options.with_scale) {
    const double var_src = src.squaredNorm() / static_cast<double>(m);
    out.scale = svd.singularValues().dot(flip) / var_src;
  }
  out.translation = mu_dst.transpose() - out.scale * out.rotation * mu_src.transpose();
  return out;
}

double masked_mean_l2(const Mesh & a, const Mesh & b, const VertexMask & mask)
{
  require(a.num_vertices() == b.num_vertices(), "masked_mean_l2: vertex count mismatch");
  return masked_mean_l2(a.flat_view(), b.flat_view(), mask);
}

double masked_mean_l2(
  const Eigen::Ref<const Eigen::VectorXd> & a, const Eigen::Ref<const Eigen::VectorXd> & b,
  const VertexMask & mask)
{
  require(a.size() == b.size(), "masked_mean_l2: length mismatch");
  require(a.size() == 3 * static_cast<Eigen::Index>(mask.size()), "masked_mean_l2: mask size mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      const auto k = 3 * static_cast<Eigen::Index>(i);
      sum += (a.segment<3>(k) - b.segment<3>(k)).norm();
      ++n;
    }
  }
  if (n == 0) {
    throw InputError("masked_mean_l2: empty mask");
  }
  return sum / static_cast<double>(n);
}

}  // namespace divface
