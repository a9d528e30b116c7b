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

#include "divface/metrics.hpp"

#include "divface/error.hpp"
#include "divface/random.hpp"
#include "divface/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <ostream>

namespace divface
{

double mse(const Mesh & pred, const Mesh & gt)
{
  require(pred.num_vertices() == gt.num_vertices(), "mse: vertex counts differ (" + std::to_string(pred.num_vertices()) +
                                                       " vs " + std::to_string(gt.num_vertices()) + ")");
  const VertexMask all(gt.num_vertices(), true);
  const RigidTransform t = procrustes_align(pred, gt, all, {.with_scale = false});
  return masked_mean_l2(t.apply(pred), gt, all);
}

double cse(const std::vector<Mesh> & set, const Mesh & gt)
{
  require(!set.empty(), "cse: empty completion set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto & m : set) {
    best = std::min(best, mse(m, gt));
  }
  return best;
}

double asd(const std::vector<Mesh> & set, const VertexMask & region)
{
  require(set.size() >= 2, "asd: need at least 2 samples");
  require(region.count() > 0, "asd: empty region");
  const auto m = set.size();
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = masked_mean_l2(set[i], set[j], region);
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  double sum = 0.0;
  for (double d : nearest) {
    sum += d;
  }
  return sum / static_cast<double>(m);
}

std::vector<BenchmarkRow> BenchmarkReport::select(const std::string & method, double fraction) const
{
  std::vector<BenchmarkRow> out;
  for (const auto & r : rows) {
    if (r.method == method && r.occlusion_frac == fraction) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<BenchmarkRow> BenchmarkReport::aggregate() const
{
  std::vector<BenchmarkRow> out;
  std::map<std::pair<double, std::string>, std::pair<BenchmarkRow, int>> groups;
  std::vector<std::pair<double, std::string>> order;
  for (const auto & r : rows) {
    const auto key = std::make_pair(r.occlusion_frac, r.method);
    auto it = groups.find(key);
    if (it == groups.end()) {
      BenchmarkRow acc;
      acc.instance = -1;
      acc.occlusion_frac = r.occlusion_frac;
      acc.method = r.method;
      acc.seed = r.seed;
      it = groups.emplace(key, std::make_pair(acc, 0)).first;
      order.push_back(key);
    }
    auto & [acc, n] = it->second;
    acc.mse += r.mse;
    acc.cse += r.cse;
    acc.asd_v += r.asd_v;
    acc.asd_o += r.asd_o;
    acc.visible_error += r.visible_error;
    ++n;
  }
  for (const auto & key : order) {
    auto [acc, n] = groups.at(key);
    const double inv = 1.0 / static_cast<double>(n);
    acc.mse *= inv;
    acc.cse *= inv;
    acc.asd_v *= inv;
    acc.asd_o *= inv;
    acc.visible_error *= inv;
    out.push_back(acc);
  }
  return out;
}

namespace
{

void write_rows(std::ostream & out, const std::vector<BenchmarkRow> & rows, bool with_instance)
{
  out << (with_instance ? "instance," : "") << "occlusion_frac,method,MSE,CSE,ASD_V,ASD_O,seed\n";
  char buf[256];
  for (const auto & r : rows) {
    if (with_instance) {
      std::snprintf(buf, sizeof(buf), "%d,", r.instance);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.2f,%s,%.9e,%.9e,%.9e,%.9e,%llu\n", r.occlusion_frac, r.method.c_str(), r.mse,
      r.cse, r.asd_v, r.asd_o, static_cast<unsigned long long>(r.seed));
    out << buf;
  }
}

struct TaskOutput
{
  std::vector<BenchmarkRow> rows;
  std::vector<std::pair<std::string, Mesh>> meshes;
  VertexMask occlusion;
};

BenchmarkRow single_row(const Mesh & fit, const Mesh & gt, const VertexMask & visible)
{
  BenchmarkRow row;
  row.mse = mse(fit, gt);
  row.cse = row.mse;
  row.visible_error = masked_mean_l2(fit, gt, visible);
  return row;
}

BenchmarkRow set_row(const std::vector<Mesh> & set, const Mesh & gt, const VertexMask & occlusion)
{
  BenchmarkRow row;
  const VertexMask visible = occlusion.complement();
  for (const auto & m : set) {
    const double e = mse(m, gt);
    row.mse += e;
    row.visible_error += masked_mean_l2(m, gt, visible);
  }
  row.mse /= static_cast<double>(set.size());
  row.visible_error /= static_cast<double>(set.size());
  row.cse = cse(set, gt);
  row.asd_v = asd(set, visible);
  row.asd_o = asd(set, occlusion);
  return row;
}

TaskOutput run_task(
  const BlendshapeModel & model, const BlendshapeModel & coarse_only, const LatentModel & latent, const Mesh & gt,
  int instance, double fraction, std::uint64_t seed, const BenchmarkConfig & config, bool keep_meshes)
{
  TaskOutput out;
  const std::size_t n = gt.num_vertices();
  out.occlusion = fraction > 0.0 ? grow_occlusion(gt, fraction, derive_seed(seed, "occlusion")) : VertexMask(n);
  const VertexMask visible = out.occlusion.complement();
  const Observation obs = Observation::dense(gt, VertexMask(n, true), out.occlusion);

  const FitResult global = fit_partial(coarse_only, obs, config.fit);
  const FitResult local = fit_partial(model, obs, config.fit);
  BenchmarkRow r_global = single_row(global.partial, gt, visible);
  r_global.method = kMethodGlobal;
  BenchmarkRow r_local = single_row(local.partial, gt, visible);
  r_local.method = kMethodGlobalLocal;
  out.rows = {r_global, r_local};
  if (keep_meshes) {
    out.meshes.emplace_back("gt", gt);
    out.meshes.emplace_back(kMethodGlobal, global.partial);
    out.meshes.emplace_back(kMethodGlobalLocal, local.partial);
  }
  if (fraction > 0.0) {
    DiversifyHyper hyper = config.diversify;
    hyper.seed = derive_seed(seed, "diversify");
    const CompletionSet set = optimize_completions(latent, local, out.occlusion, hyper);
    std::vector<Mesh> raw;
    for (const auto & z : set.initial_latents) {
      raw.push_back(decode(latent, z));
    }
    BenchmarkRow r_raw = set_row(raw, gt, out.occlusion);
    r_raw.method = kMethodSamples;
    BenchmarkRow r_div = set_row(set.completions, gt, out.occlusion);
    r_div.method = kMethodDiverse;
    out.rows.push_back(r_raw);
    out.rows.push_back(r_div);
    if (keep_meshes) {
      char name[64];
      for (std::size_t j = 0; j < raw.size(); ++j) {
        std::snprintf(name, sizeof(name), "%s_%02zu", kMethodSamples, j);
        out.meshes.emplace_back(name, raw[j]);
        std::snprintf(name, sizeof(name), "%s_%02zu", kMethodDiverse, j);
        out.meshes.emplace_back(name, set.completions[j]);
      }
    }
  }
  for (auto & r : out.rows) {
    r.instance = instance;
    r.occlusion_frac = fraction;
    r.seed = seed;
  }
  return out;
}

}  // namespace

void BenchmarkReport::write_csv(std::ostream & out) const
{
  write_rows(out, rows, true);
}

void BenchmarkReport::write_summary_csv(std::ostream & out) const
{
  write_rows(out, aggregate(), false);
}

BenchmarkReport run_benchmark(
  const BlendshapeModel & model, const LatentModel & latent, const std::vector<Mesh> & test_meshes,
  const BenchmarkConfig & config, const std::filesystem::path & obj_dir)
{
  require(!test_meshes.empty(), "benchmark: no test meshes");
  require(!config.fractions.empty(), "benchmark: no occlusion fractions");
  require(config.jobs >= 1, "benchmark: jobs must be >= 1");
  for (double f : config.fractions) {
    require(f >= 0.0 && f <= 0.9, "benchmark: occlusion fractions must lie in [0, 0.9]");
  }
  config.fit.validate();
  config.diversify.validate();
  const auto n = model.global.templ.num_vertices();
  require(latent.templ.num_vertices() == n, "benchmark: latent model and blendshape model disagree on vertex count");
  for (const auto & m : test_meshes) {
    require(m.num_vertices() == n, "benchmark: test mesh vertex count does not match the model");
  }
  const BlendshapeModel coarse_only = global_only(model);

  const auto num_instances = static_cast<int>(test_meshes.size());
  const auto num_fractions = static_cast<int>(config.fractions.size());
  const int tasks = num_instances * num_fractions;
  std::vector<TaskOutput> outputs(static_cast<std::size_t>(tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.jobs)
  for (int t = 0; t < tasks; ++t) {
    const int instance = t / num_fractions;
    const int fi = t % num_fractions;
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(t));
    try {
      outputs[static_cast<std::size_t>(t)] = run_task(model, coarse_only, latent,
        test_meshes[static_cast<std::size_t>(instance)], instance, config.fractions[static_cast<std::size_t>(fi)], seed,
        config, instance < config.dump_instances && !obj_dir.empty());
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto & e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  BenchmarkReport report;
  for (int t = 0; t < tasks; ++t) {
    const TaskOutput & out = outputs[static_cast<std::size_t>(t)];
    report.rows.insert(report.rows.end(), out.rows.begin(), out.rows.end());
    if (out.meshes.empty()) {
      continue;
    }
    char dir_name[64];
    std::snprintf(dir_name, sizeof(dir_name), "instance_%03d_occ_%.2f", t / num_fractions,
      config.fractions[static_cast<std::size_t>(t % num_fractions)]);
    const std::filesystem::path dir = obj_dir / dir_name;
    std::filesystem::create_directories(dir);
    for (const auto & [name, mesh] : out.meshes) {
      save_obj(mesh, dir / (name + ".obj"));
    }
    save_mask(out.occlusion, dir / "occlusion.txt");
  }
  return report;
}

}  // namespace divface
