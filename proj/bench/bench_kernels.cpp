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

#include "divface/kernels.hpp"
#include "divface/random.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace
{

using divface::Execution;

Eigen::VectorXd normal_vector(divface::Rng & rng, Eigen::Index n)
{
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = normal(rng);
  }
  return v;
}

std::vector<Eigen::VectorXd> random_shapes(int count, Eigen::Index n)
{
  divface::Rng rng(7);
  std::vector<Eigen::VectorXd> shapes;
  for (int i = 0; i < count; ++i) {
    shapes.push_back(normal_vector(rng, 3 * n));
  }
  return shapes;
}

divface::VertexMask half_mask(std::size_t n)
{
  divface::VertexMask mask(n, false);
  for (std::size_t i = 0; i < n; i += 2) {
    mask.set(i, true);
  }
  return mask;
}

template <Execution E>
void BM_PairwiseDistances(benchmark::State & state)
{
  const auto n = static_cast<Eigen::Index>(state.range(1));
  const auto shapes = random_shapes(static_cast<int>(state.range(0)), n);
  const auto mask = half_mask(static_cast<std::size_t>(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(divface::pairwise_distances(shapes, mask, divface::PairMetric::MaskedNorm, E));
  }
}

template <Execution E>
void BM_LinearDecode(benchmark::State & state)
{
  const Eigen::Index d = 24;
  const auto n = static_cast<Eigen::Index>(state.range(1));
  divface::Rng rng(11);
  Eigen::MatrixXd w(3 * n, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    w.col(c) = normal_vector(rng, 3 * n);
  }
  const Eigen::VectorXd mean = normal_vector(rng, 3 * n);
  Eigen::MatrixXd z(d, state.range(0));
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    z.col(c) = normal_vector(rng, d);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(divface::linear_decode_batch(w, mean, z, E));
  }
}

}  // namespace

BENCHMARK(BM_PairwiseDistances<Execution::Serial>)->Args({10, 642})->Args({64, 2562})->Args({200, 2562});
BENCHMARK(BM_PairwiseDistances<Execution::Parallel>)->Args({10, 642})->Args({64, 2562})->Args({200, 2562});
BENCHMARK(BM_LinearDecode<Execution::Serial>)->Args({10, 642})->Args({200, 2562});
BENCHMARK(BM_LinearDecode<Execution::Parallel>)->Args({10, 642})->Args({200, 2562});

BENCHMARK_MAIN();
