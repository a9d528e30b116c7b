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

#ifndef DIVFACE__TENSOR_IO_HPP_
#define DIVFACE__TENSOR_IO_HPP_

#include "divface/mesh.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace divface
{

/// Little-endian tensor container shared by model files.
///
/// Layout: magic `DSC1`, u32 version, u32 tensor count, then per tensor
/// u16 name length, name bytes, u8 dtype (0 = f64), u8 rank, rank x u64 dims
/// and the row-major payload.
struct Tensor
{
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

class TensorArchive
{
public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string & name, Tensor tensor);
  void put_matrix(const std::string & name, const Eigen::MatrixXd & m);
  void put_vector(const std::string & name, const Eigen::VectorXd & v);
  void put_scalar(const std::string & name, double value);

  bool contains(const std::string & name) const;
  const Tensor & get(const std::string & name) const;
  Eigen::MatrixXd matrix(const std::string & name) const;
  Eigen::VectorXd vector(const std::string & name) const;
  double scalar(const std::string & name) const;

  const std::vector<std::pair<std::string, Tensor>> & entries() const { return entries_; }

  void save(const std::filesystem::path & path) const;
  static TensorArchive load(const std::filesystem::path & path);

  std::string serialize() const;
  static TensorArchive deserialize(const std::string & bytes);

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Stores a mesh as `template` (N x 3) and `faces` (F x 3, integral f64).
void put_template(TensorArchive & archive, const Mesh & mesh);
Mesh template_from_archive(const TensorArchive & archive);

}  // namespace divface

#endif  // DIVFACE__TENSOR_IO_HPP_
