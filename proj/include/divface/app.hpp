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

#ifndef DIVFACE__APP_HPP_
#define DIVFACE__APP_HPP_

#include "divface/blendshape.hpp"
#include "divface/config.hpp"
#include "divface/diversify.hpp"
#include "divface/fitter.hpp"
#include "divface/latent.hpp"
#include "divface/metrics.hpp"
#include "divface/synthetic.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace divface
{

struct SyntheticData
{
  GroundTruthGenerator generator;
  SubjectCorpus train;
  std::vector<Sample> test;
};

SyntheticData make_synthetic(const RunConfig & config);
TrainingCorpus training_corpus(const SubjectCorpus & corpus);
BlendshapeModel train_blendshape(const TrainingCorpus & corpus, const ModelSettings & settings);
LatentModel train_latent(const std::vector<Mesh> & dataset, const RunConfig & config);

/// Writes `run.lock`: the canonical config followed by the derived stage seeds
/// as comments.
void write_run_lock(const std::filesystem::path & dir, const RunConfig & config);

struct PipelineResult
{
  FitResult fit;
  CompletionSet completions;
  VertexMask occlusion;
};

/// Fit, encode + sample, diversify; artifacts go to config.paths.output_dir.
PipelineResult execute_pipeline(const RunConfig & config, std::ostream & log);

/// execute_pipeline with errors mapped to exit statuses (0 ok, 1 numeric, 2 input).
int run_pipeline(const RunConfig & config, std::ostream & log, std::ostream & err);

/// Benchmark on synthetic test instances with models from the config paths
/// (or trained in-process when the paths are empty). Writes report.csv,
/// summary.csv, run.lock and the OBJ dumps under `out_dir`.
BenchmarkReport execute_benchmark(const RunConfig & config, const std::filesystem::path & out_dir);

/// Meshes listed in `dir/manifest.csv` (files sample_%04d.obj), in manifest order.
std::vector<Mesh> load_dataset_dir(const std::filesystem::path & dir);

/// Command-line entry point; args[0] is the program name.
int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace divface

#endif  // DIVFACE__APP_HPP_
