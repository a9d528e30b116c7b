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

#ifndef DIVFACE_TESTS__FIXTURES_HPP_
#define DIVFACE_TESTS__FIXTURES_HPP_

#include "divface/blendshape.hpp"
#include "divface/latent.hpp"
#include "divface/synthetic.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <random>
#include <string>

namespace divface::testing
{

/// Small synthetic world shared by the unit tests: 162-vertex sphere,
/// 6 + 6 generator fields, 12 subjects with 3 expressions each.
struct World
{
  GroundTruthGenerator gen;
  SubjectCorpus corpus;
  TrainingCorpus training;
  BlendshapeModel model;
  LatentModel latent;
  std::vector<Sample> test;
};

inline World make_world()
{
  GroundTruthGenerator gen = make_generator(make_template(2), 6, 6, 11);
  SubjectCorpus corpus = sample_subjects(gen, 12, 3, 0.1, 12);
  TrainingCorpus training{corpus.meshes(), corpus.subject, corpus.neutral_index};
  GlobalModel global = train_global(training, 4, 4);
  const RegionAtlas atlas = make_region_atlas(global.templ);
  LocalModels local = train_local(global, training.meshes, atlas, {2, 2}, {3, 3});
  BlendshapeModel model{std::move(global), std::move(local), {2, 2}};
  LatentModel latent = train_linear(training.meshes, 8);
  std::vector<Sample> test = sample_dataset(gen, 6, 0.1, 13);
  return World{std::move(gen), std::move(corpus), std::move(training), std::move(model), std::move(latent),
    std::move(test)};
}

inline const World & world()
{
  static const World w = make_world();
  return w;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64 & rng, double sd = 1.0)
{
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = normal(rng);
  }
  return v;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  explicit TempDir(const std::string & tag)
  {
    path_ = std::filesystem::temp_directory_path() /
            ("divface_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir &) = delete;
  TempDir & operator=(const TempDir &) = delete;
  const std::filesystem::path & path() const { return path_; }
  std::filesystem::path operator/(const std::string & name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

}  // namespace divface::testing

#endif  // DIVFACE_TESTS__FIXTURES_HPP_
