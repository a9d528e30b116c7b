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

#include "divface/tensor_io.hpp"

#include "divface/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace divface
{

namespace
{

constexpr char kMagic[4] = {'D', 'S', 'C', '1'};

template <typename T>
void write_le(std::string & out, T value)
{
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
    std::conditional_t<sizeof(T) == 4, std::uint32_t,
      std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
}

class Reader
{
public:
  explicit Reader(const std::string & bytes) : bytes_(bytes) {}

  template <typename T>
  T read()
  {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
      std::conditional_t<sizeof(T) == 4, std::uint32_t,
        std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string read_bytes(std::size_t n)
  {
    need(n);
    std::string out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (pos_ + n > bytes_.size()) {
      throw InputError("tensor file truncated");
    }
  }

  const std::string & bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void TensorArchive::put(const std::string & name, Tensor tensor)
{
  require(!name.empty() && name.size() < 65536, "tensor name length out of range");
  std::uint64_t expected = 1;
  for (auto d : tensor.dims) {
    expected *= d;
  }
  require(expected == tensor.data.size(), "tensor '" + name + "' payload does not match its dims");
  require(!contains(name), "duplicate tensor name " + name);
  entries_.emplace_back(name, std::move(tensor));
}

void TensorArchive::put_matrix(const std::string & name, const Eigen::MatrixXd & m)
{
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
    t.data.data(), m.rows(), m.cols()) = m;
  put(name, std::move(t));
}

void TensorArchive::put_vector(const std::string & name, const Eigen::VectorXd & v)
{
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  put(name, std::move(t));
}

void TensorArchive::put_scalar(const std::string & name, double value)
{
  put(name, Tensor{{}, {value}});
}

bool TensorArchive::contains(const std::string & name) const
{
  for (const auto & [n, t] : entries_) {
    if (n == name) {
      return true;
    }
  }
  return false;
}

const Tensor & TensorArchive::get(const std::string & name) const
{
  for (const auto & [n, t] : entries_) {
    if (n == name) {
      return t;
    }
  }
  throw InputError("tensor '" + name + "' missing from model file");
}

Eigen::MatrixXd TensorArchive::matrix(const std::string & name) const
{
  const Tensor & t = get(name);
  require(t.dims.size() == 2, "tensor '" + name + "' is not a matrix");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
    t.data.data(), static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1]));
}

Eigen::VectorXd TensorArchive::vector(const std::string & name) const
{
  const Tensor & t = get(name);
  require(t.dims.size() == 1, "tensor '" + name + "' is not a vector");
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

double TensorArchive::scalar(const std::string & name) const
{
  const Tensor & t = get(name);
  require(t.data.size() == 1, "tensor '" + name + "' is not a scalar");
  return t.data.front();
}

std::string TensorArchive::serialize() const
{
  std::string out(kMagic, 4);
  write_le(out, kVersion);
  write_le(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto & [name, t] : entries_) {
    write_le(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    write_le(out, std::uint8_t{0});
    write_le(out, static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) {
      write_le(out, d);
    }
    for (double x : t.data) {
      write_le(out, x);
    }
  }
  return out;
}

TensorArchive TensorArchive::deserialize(const std::string & bytes)
{
  Reader in(bytes);
  if (in.read_bytes(4) != std::string(kMagic, 4)) {
    throw InputError("not a DSC1 tensor file (bad magic)");
  }
  const auto version = in.read<std::uint32_t>();
  if (version != kVersion) {
    throw InputError("unsupported tensor file version " + std::to_string(version) +
                     " (reader supports " + std::to_string(kVersion) + ")");
  }
  const auto count = in.read<std::uint32_t>();
  TensorArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.read<std::uint16_t>();
    std::string name = in.read_bytes(name_len);
    const auto dtype = in.read<std::uint8_t>();
    if (dtype != 0) {
      throw InputError("tensor '" + name + "' has unsupported dtype " + std::to_string(dtype));
    }
    const auto rank = in.read<std::uint8_t>();
    Tensor t;
    std::uint64_t total = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.read<std::uint64_t>());
      total *= t.dims.back();
    }
    if (total > bytes.size() / 8) {
      throw InputError("tensor file truncated");
    }
    t.data.resize(total);
    for (auto & x : t.data) {
      x = in.read<double>();
    }
    archive.put(name, std::move(t));
  }
  if (!in.done()) {
    throw InputError("trailing bytes after last tensor");
  }
  return archive;
}

void TensorArchive::save(const std::filesystem::path & path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw InputError("write failed for " + path.string());
  }
}

TensorArchive TensorArchive::load(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open model file " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void put_template(TensorArchive & archive, const Mesh & mesh)
{
  archive.put_matrix("template", mesh.vertices());
  Eigen::MatrixXd faces(static_cast<Eigen::Index>(mesh.num_faces()), 3);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      faces(static_cast<Eigen::Index>(f), k) = mesh.faces()[f][static_cast<std::size_t>(k)];
    }
  }
  archive.put_matrix("faces", faces);
}

Mesh template_from_archive(const TensorArchive & archive)
{
  const Eigen::MatrixXd v = archive.matrix("template");
  const Eigen::MatrixXd f = archive.matrix("faces");
  require(v.cols() == 3 && f.cols() == 3, "template tensors must have 3 columns");
  Faces faces(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (int k = 0; k < 3; ++k) {
      faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = static_cast<int>(f(i, k));
    }
  }
  return {Vertices(v), std::move(faces)};
}

}  // namespace divface
