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

#ifndef DIVFACE__CONFIG_HPP_
#define DIVFACE__CONFIG_HPP_

#include "divface/blendshape.hpp"
#include "divface/diversify.hpp"
#include "divface/fitter.hpp"
#include "divface/latent.hpp"
#include "divface/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace divface
{

struct SynthSettings
{
  int subdivisions = 3;
  int n_shape = 12;
  int n_expr = 12;
  double coeff_sigma = 0.1;
  double bump_width = 0.4;
  double spectrum_decay = 1.0;
  int subjects = 40;
  int expressions_per_subject = 5;
  int test_count = 50;
};

struct ModelSettings
{
  int global_shape = 8;
  int global_expr = 8;
  CoarseRanks coarse;
  LocalRanks local;
  bool unpose = false;
};

struct LatentSettings
{
  std::string variant = "linear";
  int latent_dim = 24;
  double min_noise_ratio = 1e-6;
  double prior_var = 0.0;
};

struct PipelineSettings
{
  std::string mode = "dense";
  double occlusion_fraction = 0.3;
  int test_index = 0;
};

/// Empty model paths mean "train from the synthetic settings"; an empty
/// target means "use a synthetic test instance".
struct PathSettings
{
  std::string model;
  std::string latent_model;
  std::string target;
  std::string occlusion_mask;
  std::string landmarks;
  std::string output_dir = "divface_out";
};

struct RunConfig
{
  std::uint64_t seed = 0;
  SynthSettings synth;
  ModelSettings model;
  LatentSettings latent;
  VaeTrainConfig vae;
  FitHyper fit;
  DiversifyHyper diversify;
  BenchmarkConfig benchmark;
  int benchmark_instances = 50;
  PipelineSettings pipeline;
  PathSettings paths;

  void validate() const;
  /// Every setting as `[section]` / `key = value` lines in a fixed order.
  std::string canonical() const;
};

RunConfig parse_config(const std::filesystem::path & path);
RunConfig parse_config_text(std::string_view text, const std::string & source = "<config>");

/// Per-stage seeds split from the top-level seed.
std::uint64_t stage_seed(const RunConfig & config, std::string_view stage);

}  // namespace divface

#endif  // DIVFACE__CONFIG_HPP_
