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

#ifndef DIVFACE__MESH_HPP_
#define DIVFACE__MESH_HPP_

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace divface
{

/// N x 3 vertex positions, row-major so a mesh flattens to (x0, y0, z0, x1, ...).
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Face = std::array<int, 3>;
using Faces = std::vector<Face>;

/// Triangle mesh. Construction validates that every face references three
/// distinct in-range vertices.
class Mesh
{
public:
  /// Empty mesh with no vertices or faces.
  Mesh() = default;
  Mesh(Vertices vertices, Faces faces);

  /// Rebuilds a mesh from a flattened 3N coordinate vector.
  static Mesh from_flat(const Eigen::VectorXd & flat, Faces faces);

  const Vertices & vertices() const { return vertices_; }
  const Faces & faces() const { return faces_; }
  std::size_t num_vertices() const { return static_cast<std::size_t>(vertices_.rows()); }
  std::size_t num_faces() const { return faces_.size(); }

  Eigen::VectorXd flat() const;
  Eigen::Map<const Eigen::VectorXd> flat_view() const
  {
    return {vertices_.data(), vertices_.size()};
  }

  /// Same topology, new positions.
  Mesh with_vertices(Vertices vertices) const;
  Mesh with_flat(const Eigen::VectorXd & flat) const;

private:
  Vertices vertices_;
  Faces faces_;
};

/// Per-vertex selection flags.
class VertexMask
{
public:
  VertexMask() = default;
  explicit VertexMask(std::size_t size, bool value = false) : flags_(size, value ? 1 : 0) {}
  explicit VertexMask(std::vector<unsigned char> flags) : flags_(std::move(flags)) {}

  std::size_t size() const { return flags_.size(); }
  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  void set(std::size_t i, bool value) { flags_[i] = value ? 1 : 0; }

  std::size_t count() const;
  std::vector<int> indices() const;
  VertexMask complement() const;
  VertexMask operator&(const VertexMask & other) const;
  VertexMask operator|(const VertexMask & other) const;
  bool operator==(const VertexMask & other) const = default;

  /// 0/1 weight per flattened coordinate (length 3N).
  Eigen::VectorXd coordinate_weights() const;

private:
  std::vector<unsigned char> flags_;
};

struct Region
{
  std::string name;
  VertexMask mask;
};

/// Exactly 14 named regions whose union covers every vertex.
class RegionAtlas
{
public:
  static constexpr std::size_t kNumRegions = 14;

  explicit RegionAtlas(std::vector<Region> regions);

  const std::vector<Region> & regions() const { return regions_; }
  std::size_t size() const { return regions_.size(); }
  const Region & operator[](std::size_t i) const { return regions_[i]; }
  std::size_t num_vertices() const { return regions_.front().mask.size(); }

private:
  std::vector<Region> regions_;
};

/// x -> scale * rotation * x + translation
struct RigidTransform
{
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  static RigidTransform identity() { return {}; }

  /// Throws InputError unless rotation is orthonormal with det +1 and scale > 0.
  void validate() const;

  Eigen::Vector3d apply(const Eigen::Vector3d & x) const { return scale * rotation * x + translation; }
  Vertices apply(const Vertices & v) const;
  Mesh apply(const Mesh & mesh) const;
};

Mesh load_obj(const std::filesystem::path & path);
void save_obj(const Mesh & mesh, const std::filesystem::path & path);

/// Mask files hold one `0` or `1` per line.
VertexMask load_mask(const std::filesystem::path & path);
void save_mask(const VertexMask & mask, const std::filesystem::path & path);

/// Sorted, deduplicated neighbour lists from the face edges.
std::vector<std::vector<int>> vertex_adjacency(const Mesh & mesh);

/// Uniform graph Laplacian: degree on the diagonal, -1 per edge.
Eigen::SparseMatrix<double> graph_laplacian(const Mesh & mesh);

struct ProcrustesOptions
{
  bool with_scale = true;
};

/// Closed-form weighted similarity (or rigid) alignment of `source` onto
/// `target` over the selected vertices. Needs three non-collinear points.
RigidTransform procrustes_align(
  const Mesh & source, const Mesh & target, const VertexMask & weights,
  ProcrustesOptions options = {});
RigidTransform procrustes_align(
  const Vertices & source, const Vertices & target, const VertexMask & weights,
  ProcrustesOptions options = {});

/// Mean Euclidean distance between corresponding selected vertices.
double masked_mean_l2(const Mesh & a, const Mesh & b, const VertexMask & mask);
double masked_mean_l2(
  const Eigen::Ref<const Eigen::VectorXd> & a, const Eigen::Ref<const Eigen::VectorXd> & b,
  const VertexMask & mask);

}  // namespace divface

#endif  // DIVFACE__MESH_HPP_
