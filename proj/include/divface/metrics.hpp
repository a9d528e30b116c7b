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

#ifndef DIVFACE__METRICS_HPP_
#define DIVFACE__METRICS_HPP_

#include "divface/blendshape.hpp"
#include "divface/diversify.hpp"
#include "divface/fitter.hpp"
#include "divface/latent.hpp"
#include "divface/mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace divface
{

/// Mean per-vertex distance after rigidly aligning `pred` onto `gt`.
double mse(const Mesh & pred, const Mesh & gt);

/// Smallest mse over the set.
double cse(const std::vector<Mesh> & set, const Mesh & gt);

/// Mean over samples of the masked distance to the nearest other sample.
double asd(const std::vector<Mesh> & set, const VertexMask & region);

struct BenchmarkConfig
{
  std::vector<double> fractions{0.25, 0.30, 0.40};
  FitHyper fit;
  DiversifyHyper diversify;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// OBJ outputs are written for this many leading instances.
  int dump_instances = 1;
};

inline constexpr const char * kMethodGlobal = "global";
inline constexpr const char * kMethodGlobalLocal = "global_local";
inline constexpr const char * kMethodSamples = "vae_samples";
inline constexpr const char * kMethodDiverse = "diverse";

struct BenchmarkRow
{
  int instance = 0;
  double occlusion_frac = 0.0;
  std::string method;
  double mse = 0.0;
  double cse = 0.0;
  double asd_v = 0.0;
  double asd_o = 0.0;
  /// Mean distance to the ground truth over the visible vertices.
  double visible_error = 0.0;
  std::uint64_t seed = 0;
};

struct BenchmarkReport
{
  std::vector<BenchmarkRow> rows;
  std::string config_text;

  /// Rows with the given method and fraction, ordered by instance.
  std::vector<BenchmarkRow> select(const std::string & method, double fraction) const;
  /// Arithmetic means of the per-instance rows; instance is set to -1.
  std::vector<BenchmarkRow> aggregate() const;

  void write_csv(std::ostream & out) const;
  void write_summary_csv(std::ostream & out) const;
};

/// Runs every method on every (test mesh, occlusion fraction) pair. Fractions
/// of 0 run only the two fitting methods. OBJ files for the first
/// `dump_instances` instances go under `obj_dir` when it is non-empty.
BenchmarkReport run_benchmark(
  const BlendshapeModel & model, const LatentModel & latent, const std::vector<Mesh> & test_meshes,
  const BenchmarkConfig & config, const std::filesystem::path & obj_dir = {});

}  // namespace divface

#endif  // DIVFACE__METRICS_HPP_
