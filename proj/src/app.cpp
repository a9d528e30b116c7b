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

#include "divface/app.hpp"

#include "divface/error.hpp"
#include "divface/random.hpp"
#include "divface/tensor_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace divface
{

namespace
{

std::string sample_file(std::size_t i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04zu.obj", i);
  return buf;
}

std::string indexed(const char * fmt, std::size_t i)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, i);
  return buf;
}

std::ofstream open_out(const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write " + path.string());
  }
  return out;
}

std::string fmt_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::vector<double>> read_csv_numbers(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(item, &used));
      } catch (const std::exception &) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + item + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::filesystem::path & path, const std::vector<Sample> & samples)
{
  auto out = open_out(path);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << i;
    for (double c : samples[i].shape) {
      out << "," << fmt_double(c);
    }
    for (double c : samples[i].expr) {
      out << "," << fmt_double(c);
    }
    out << "\n";
  }
}

void write_split(const std::filesystem::path & dir, const std::vector<Sample> & samples)
{
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    save_obj(samples[i].mesh, dir / sample_file(i));
  }
  write_manifest(dir / "manifest.csv", samples);
}

void write_latents(const std::filesystem::path & path, const std::vector<Eigen::VectorXd> & latents)
{
  auto out = open_out(path);
  for (const auto & z : latents) {
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      out << (k ? "," : "") << fmt_double(z[k]);
    }
    out << "\n";
  }
}

void write_fit(const std::filesystem::path & dir, const FitResult & fit)
{
  std::filesystem::create_directories(dir);
  save_obj(fit.partial, dir / "fit.obj");
  TensorArchive archive;
  archive.put_vector("shape", fit.params.shape);
  archive.put_vector("expr", fit.params.expr);
  for (std::size_t r = 0; r < fit.params.region_shape.size(); ++r) {
    archive.put_vector(indexed("region_%02zu_shape", r), fit.params.region_shape[r]);
    archive.put_vector(indexed("region_%02zu_expr", r), fit.params.region_expr[r]);
  }
  archive.put_matrix("rotation", fit.params.rigid.rotation);
  archive.put_vector("translation", fit.params.rigid.translation);
  archive.put_scalar("scale", fit.params.rigid.scale);
  archive.put_vector("loss_trace", Eigen::Map<const Eigen::VectorXd>(
                                     fit.loss_trace.data(), static_cast<Eigen::Index>(fit.loss_trace.size())));
  archive.save(dir / "fit_params.dsc");
  auto trace = open_out(dir / "fit_trace.csv");
  trace << "iteration,loss\n";
  for (std::size_t i = 0; i < fit.loss_trace.size(); ++i) {
    trace << i << "," << fmt_double(fit.loss_trace[i]) << "\n";
  }
}

void write_matrix(const std::filesystem::path & path, const Eigen::MatrixXd & m)
{
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << fmt_double(m(r, c));
    }
    out << "\n";
  }
}

void write_completions(const std::filesystem::path & dir, const CompletionSet & set, const LatentModel * dump_kernel_model)
{
  std::filesystem::create_directories(dir);
  for (std::size_t j = 0; j < set.completions.size(); ++j) {
    save_obj(set.completions[j], dir / indexed("completion_%02zu.obj", j));
  }
  auto trace = open_out(dir / "trace.csv");
  trace << "iteration,total,L_S,L_dpp\n";
  for (std::size_t i = 0; i < set.trace.size(); ++i) {
    trace << i << "," << fmt_double(set.trace[i].total) << "," << fmt_double(set.trace[i].fidelity) << ","
          << fmt_double(set.trace[i].dpp) << "\n";
  }
  write_latents(dir / "latents.csv", set.latents);
  if (dump_kernel_model) {
    for (const auto & [name, latents] :
      {std::pair{"kernel_initial.txt", &set.initial_latents}, std::pair{"kernel_final.txt", &set.latents}}) {
      std::vector<Eigen::VectorXd> shapes;
      for (const auto & z : *latents) {
        shapes.push_back(decode_flat(*dump_kernel_model, z));
      }
      write_matrix(dir / name, build_kernel(shapes, *latents, set.occlusion, set.k).L);
    }
  }
}

Observation synthetic_sparse(const Mesh & templ, const Mesh & target, const VertexMask & occlusion)
{
  const std::vector<int> lm = landmark_vertices(templ);
  Vertices pts(static_cast<Eigen::Index>(lm.size()), 3);
  Eigen::VectorXd conf(static_cast<Eigen::Index>(lm.size()));
  for (std::size_t l = 0; l < lm.size(); ++l) {
    pts.row(static_cast<Eigen::Index>(l)) = target.vertices().row(lm[l]);
    conf[static_cast<Eigen::Index>(l)] = occlusion[static_cast<std::size_t>(lm[l])] ? 0.05 : 1.0;
  }
  return Observation::sparse(project_weak_perspective(pts, Camera{}), conf, occlusion);
}

}  // namespace

SyntheticData make_synthetic(const RunConfig & config)
{
  const Mesh templ = make_template(config.synth.subdivisions);
  GeneratorOptions options;
  options.bump_width = config.synth.bump_width;
  options.spectrum_decay = config.synth.spectrum_decay;
  SyntheticData data{
    make_generator(templ, config.synth.n_shape, config.synth.n_expr, stage_seed(config, "generator"), options), {}, {}};
  data.train = sample_subjects(data.generator, config.synth.subjects, config.synth.expressions_per_subject,
    config.synth.coeff_sigma, stage_seed(config, "train"));
  data.test = sample_dataset(data.generator, std::max(config.synth.test_count, config.benchmark_instances),
    config.synth.coeff_sigma, stage_seed(config, "test"));
  return data;
}

TrainingCorpus training_corpus(const SubjectCorpus & corpus)
{
  return TrainingCorpus{corpus.meshes(), corpus.subject, corpus.neutral_index};
}

BlendshapeModel train_blendshape(const TrainingCorpus & corpus, const ModelSettings & settings)
{
  GlobalModel global = train_global(corpus, settings.global_shape, settings.global_expr);
  const RegionAtlas atlas = make_region_atlas(global.templ);
  LocalModels local =
    train_local(global, corpus.meshes, atlas, settings.coarse, settings.local, LocalTrainOptions{settings.unpose});
  BlendshapeModel model{std::move(global), std::move(local), settings.coarse};
  model.validate();
  return model;
}

LatentModel train_latent(const std::vector<Mesh> & dataset, const RunConfig & config)
{
  if (config.latent.variant == "linear") {
    return train_linear(dataset, config.latent.latent_dim, {config.latent.min_noise_ratio, config.latent.prior_var});
  }
  VaeTrainConfig cfg = config.vae;
  cfg.latent_dim = config.latent.latent_dim;
  cfg.seed = stage_seed(config, "vae");
  return train_vae(dataset, cfg).model;
}

void write_run_lock(const std::filesystem::path & dir, const RunConfig & config)
{
  std::filesystem::create_directories(dir);
  auto out = open_out(dir / "run.lock");
  out << config.canonical();
  out << "\n# derived stage seeds\n";
  for (const char * stage : {"generator", "train", "test", "vae", "pipeline", "benchmark"}) {
    out << "# " << stage << " = " << stage_seed(config, stage) << "\n";
  }
}

PipelineResult execute_pipeline(const RunConfig & config, std::ostream & log)
{
  config.validate();
  const std::filesystem::path out_dir = config.paths.output_dir;
  const bool need_synthetic = config.paths.model.empty() || config.paths.latent_model.empty() || config.paths.target.empty();
  std::optional<SyntheticData> synthetic;
  if (need_synthetic) {
    synthetic = make_synthetic(config);
  }
  const BlendshapeModel model = config.paths.model.empty() ? train_blendshape(training_corpus(synthetic->train), config.model)
                                                           : load_model(config.paths.model);
  const LatentModel latent =
    config.paths.latent_model.empty() ? train_latent(synthetic->train.meshes(), config) : load_latent_model(config.paths.latent_model);
  const auto n = model.global.templ.num_vertices();
  require(latent.templ.num_vertices() == n, "pipeline: latent model and blendshape model disagree on vertex count");

  const std::uint64_t seed = stage_seed(config, "pipeline");
  std::optional<Mesh> target;
  if (config.paths.target.empty()) {
    target = synthetic->test[static_cast<std::size_t>(config.pipeline.test_index)].mesh;
  } else if (config.pipeline.mode == "dense") {
    target = load_obj(config.paths.target);
  }
  VertexMask occlusion;
  if (!config.paths.occlusion_mask.empty()) {
    occlusion = load_mask(config.paths.occlusion_mask);
  } else if (config.paths.target.empty()) {
    occlusion = grow_occlusion(*target, config.pipeline.occlusion_fraction, derive_seed(seed, "occlusion"));
  } else {
    throw InputError("pipeline: paths.occlusion_mask is required with an explicit target");
  }
  require(occlusion.size() == n, "pipeline: occlusion mask has " + std::to_string(occlusion.size()) +
                                   " entries, model has " + std::to_string(n) + " vertices");

  Observation obs;
  if (config.pipeline.mode == "dense") {
    require(target->num_vertices() == n, "pipeline: target vertex count does not match the model");
    obs = Observation::dense(*target, VertexMask(n, true), occlusion);
  } else if (!config.paths.landmarks.empty()) {
    obs = load_landmarks(config.paths.landmarks);
    obs.occlusion = occlusion;
  } else {
    require(target.has_value(), "pipeline: sparse mode needs paths.landmarks");
    obs = synthetic_sparse(model.global.templ, *target, occlusion);
  }

  log << "fitting " << (config.pipeline.mode == "dense" ? "dense" : "sparse") << " observation\n";
  FitResult fit = fit_partial(model, obs, config.fit);
  log << "diversifying " << config.diversify.num_samples << " completions\n";
  DiversifyHyper hyper = config.diversify;
  hyper.seed = derive_seed(seed, "diversify");
  CompletionSet set = optimize_completions(latent, fit, occlusion, hyper);

  std::filesystem::create_directories(out_dir);
  write_run_lock(out_dir, config);
  write_fit(out_dir / "fit", fit);
  write_completions(out_dir, set, nullptr);
  save_mask(occlusion, out_dir / "occlusion.txt");
  if (target) {
    save_obj(*target, out_dir / "target.obj");
  }
  log << "wrote " << set.completions.size() << " completions to " << out_dir.string() << "\n";
  return PipelineResult{std::move(fit), std::move(set), std::move(occlusion)};
}

int run_pipeline(const RunConfig & config, std::ostream & log, std::ostream & err)
{
  try {
    execute_pipeline(config, log);
    return 0;
  } catch (const NumericError & e) {
    err << "divface pipeline: numeric error: " << e.what() << "\n";
    return 1;
  } catch (const InputError & e) {
    err << "divface pipeline: input error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error & e) {
    err << "divface pipeline: input error: " << e.what() << "\n";
    return 2;
  }
}

BenchmarkReport execute_benchmark(const RunConfig & config, const std::filesystem::path & out_dir)
{
  config.validate();
  const SyntheticData synthetic = make_synthetic(config);
  const BlendshapeModel model = config.paths.model.empty() ? train_blendshape(training_corpus(synthetic.train), config.model)
                                                           : load_model(config.paths.model);
  const LatentModel latent =
    config.paths.latent_model.empty() ? train_latent(synthetic.train.meshes(), config) : load_latent_model(config.paths.latent_model);
  std::vector<Mesh> test;
  for (int i = 0; i < config.benchmark_instances; ++i) {
    test.push_back(synthetic.test[static_cast<std::size_t>(i)].mesh);
  }
  BenchmarkConfig bench = config.benchmark;
  bench.fit = config.fit;
  bench.diversify = config.diversify;
  bench.seed = stage_seed(config, "benchmark");
  std::filesystem::create_directories(out_dir);
  BenchmarkReport report = run_benchmark(model, latent, test, bench, out_dir / "objs");
  report.config_text = config.canonical();
  write_run_lock(out_dir, config);
  {
    auto out = open_out(out_dir / "report.csv");
    report.write_csv(out);
  }
  {
    auto out = open_out(out_dir / "summary.csv");
    report.write_summary_csv(out);
  }
  return report;
}

std::vector<Mesh> load_dataset_dir(const std::filesystem::path & dir)
{
  const auto manifest = read_csv_numbers(dir / "manifest.csv");
  require(!manifest.empty(), "dataset " + dir.string() + " has an empty manifest");
  std::vector<Mesh> out;
  for (const auto & row : manifest) {
    out.push_back(load_obj(dir / sample_file(static_cast<std::size_t>(row.at(0)))));
  }
  return out;
}

namespace
{

TrainingCorpus load_training_dir(const std::filesystem::path & dir)
{
  TrainingCorpus corpus;
  corpus.meshes = load_dataset_dir(dir);
  const auto rows = read_csv_numbers(dir / "subjects.csv");
  require(rows.size() == corpus.meshes.size(), "subjects.csv must list every sample of " + dir.string());
  std::map<int, int> neutral;
  for (const auto & row : rows) {
    require(row.size() == 3, "subjects.csv rows are `sample_id,subject,neutral_sample_id`");
    corpus.subject.push_back(static_cast<int>(row[1]));
    neutral[static_cast<int>(row[1])] = static_cast<int>(row[2]);
  }
  for (const auto & [subject, idx] : neutral) {
    require(subject == static_cast<int>(corpus.neutral_index.size()), "subjects.csv: subject ids must be 0..S-1");
    corpus.neutral_index.push_back(idx);
  }
  return corpus;
}

RunConfig load_or_default(const std::string & path)
{
  return path.empty() ? RunConfig{} : parse_config(path);
}

std::filesystem::path fit_mesh_path(const std::filesystem::path & p)
{
  return std::filesystem::is_directory(p) ? p / "fit.obj" : p;
}

}  // namespace

int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Diverse 3D shape completion from partial observations", "divface"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  // synth
  auto * synth = app.add_subcommand("synth", "Generate a synthetic train/test mesh corpus");
  synth->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Top-level seed");

  // train-blendshape
  std::string data_dir;
  std::string out_path;
  auto * train_bs = app.add_subcommand("train-blendshape", "Train the global+local blendshape model");
  train_bs->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  train_bs->add_option("--data-dir", data_dir, "Training split written by `synth`")->required();
  train_bs->add_option("--out", out_path, "Model file (DSC1)")->required();

  // train-latent
  std::optional<std::string> variant;
  std::optional<int> latent_dim;
  std::optional<int> epochs;
  auto * train_lat = app.add_subcommand("train-latent", "Train the latent completion model");
  train_lat->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  train_lat->add_option("--data-dir", data_dir, "Training split written by `synth`")->required();
  train_lat->add_option("--out", out_path, "Latent model file (DSC1)")->required();
  train_lat->add_option("--variant", variant, "linear or mlp")->check(CLI::IsMember({"linear", "mlp"}));
  train_lat->add_option("--latent-dim", latent_dim, "Latent dimension");
  train_lat->add_option("--epochs", epochs, "VAE epochs");
  train_lat->add_option("--seed", seed, "Top-level seed");

  // fit
  std::string model_path;
  std::string target_path;
  std::string mask_path;
  std::string landmarks_path;
  std::string mode = "dense";
  std::optional<int> iters;
  std::optional<double> tau;
  std::optional<double> eta;
  auto * fit = app.add_subcommand("fit", "Fit the blendshape model to the visible part of an observation");
  fit->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  fit->add_option("--model", model_path, "Blendshape model file")->required();
  fit->add_option("--target", target_path, "Target OBJ (dense mode)");
  fit->add_option("--occlusion-mask", mask_path, "Occlusion mask (one 0/1 per vertex)");
  fit->add_option("--landmarks", landmarks_path, "Landmark file (sparse mode)");
  fit->add_option("--mode", mode, "dense or sparse")->check(CLI::IsMember({"dense", "sparse"}));
  fit->add_option("--out", out_dir, "Output directory")->required();
  fit->add_option("--iters", iters, "Gradient steps");
  fit->add_option("--tau", tau, "Landmark confidence threshold");
  fit->add_option("--eta", eta, "Step size");

  // complete
  std::string latent_path;
  std::string fit_path;
  std::optional<int> num_samples;
  std::optional<double> lambda_s;
  std::optional<double> lambda_dpp;
  bool dump_kernel = false;
  auto * complete = app.add_subcommand("complete", "Generate diverse completions of a fitted partial shape");
  complete->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  complete->add_option("--model", model_path, "Blendshape model file (topology check)");
  complete->add_option("--latent-model", latent_path, "Latent model file")->required();
  complete->add_option("--fit", fit_path, "fit.obj or the directory written by `fit`")->required();
  complete->add_option("--occlusion-mask", mask_path, "Occlusion mask")->required();
  complete->add_option("--num-samples", num_samples, "Number of completions M");
  complete->add_option("--iters", iters, "Diversification steps");
  complete->add_option("--lambda-s", lambda_s, "Visible fidelity weight");
  complete->add_option("--lambda-dpp", lambda_dpp, "DPP weight");
  complete->add_option("--eta", eta, "Step size");
  complete->add_option("--seed", seed, "Seed");
  complete->add_option("--out-dir", out_dir, "Output directory")->required();
  complete->add_flag("--dump-kernel", dump_kernel, "Write the initial and final DPP kernels as text matrices");

  // interpolate
  std::string completions_dir;
  int z1_from = 0;
  int z2_from = 1;
  int steps = 5;
  auto * interp = app.add_subcommand("interpolate", "Decode a straight line between two completion latents");
  interp->add_option("--latent-model", latent_path, "Latent model file")->required();
  interp->add_option("--completions", completions_dir, "Directory written by `complete`")->required();
  interp->add_option("--z1-from", z1_from, "Index of the first completion");
  interp->add_option("--z2-from", z2_from, "Index of the second completion");
  interp->add_option("--steps", steps, "Number of meshes, endpoints included");
  interp->add_option("--out-dir", out_dir, "Output directory")->required();

  // metrics
  std::string gt_path;
  std::vector<std::string> pred_paths;
  auto * metrics = app.add_subcommand("metrics", "Score predictions against a ground-truth mesh");
  metrics->add_option("--gt", gt_path, "Ground-truth OBJ")->required();
  metrics->add_option("--pred", pred_paths, "Predicted OBJ (repeatable)")->required();
  metrics->add_option("--occlusion-mask", mask_path, "Occlusion mask for ASD-V / ASD-O");
  metrics->add_option("--out", out_path, "CSV output (default: stdout)");

  // benchmark
  std::optional<int> jobs;
  std::optional<int> instances;
  auto * bench = app.add_subcommand("benchmark", "Run all methods on synthetic occluded test instances");
  bench->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  bench->add_option("--out-dir", out_dir, "Output directory")->required();
  bench->add_option("--model", model_path, "Blendshape model file (default: train in-process)");
  bench->add_option("--latent-model", latent_path, "Latent model file (default: train in-process)");
  bench->add_option("--jobs", jobs, "Parallel instances");
  bench->add_option("--instances", instances, "Number of test instances");
  bench->add_option("--seed", seed, "Top-level seed");

  // pipeline
  auto * pipe = app.add_subcommand("pipeline", "Fit, sample and diversify in one run from a config file");
  pipe->add_option("--config", config_path, "INI config file")->required()->check(CLI::ExistingFile);

  std::vector<const char *> argv;
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = load_or_default(config_path);
    if (seed) {
      config.seed = *seed;
    }
    if (name == "synth") {
      const SyntheticData data = make_synthetic(config);
      const std::filesystem::path dir = out_dir;
      write_split(dir / "train", data.train.samples);
      std::vector<Sample> test(data.test.begin(), data.test.begin() + config.synth.test_count);
      write_split(dir / "test", test);
      auto subjects = open_out(dir / "train" / "subjects.csv");
      for (std::size_t i = 0; i < data.train.samples.size(); ++i) {
        const int s = data.train.subject[i];
        subjects << i << "," << s << "," << data.train.neutral_index[static_cast<std::size_t>(s)] << "\n";
      }
      save_obj(data.generator.templ, dir / "template.obj");
      write_run_lock(dir, config);
      out << "wrote " << data.train.samples.size() << " training and " << test.size() << " test meshes to " << out_dir
          << "\n";
    } else if (name == "train-blendshape") {
      const BlendshapeModel model = train_blendshape(load_training_dir(data_dir), config.model);
      save_model(model, out_path);
      out << "saved blendshape model to " << out_path << "\n";
    } else if (name == "train-latent") {
      if (variant) {
        config.latent.variant = *variant;
      }
      if (latent_dim) {
        config.latent.latent_dim = *latent_dim;
      }
      if (epochs) {
        config.vae.epochs = *epochs;
      }
      config.validate();
      save_latent_model(train_latent(load_dataset_dir(data_dir), config), out_path);
      out << "saved " << config.latent.variant << " latent model to " << out_path << "\n";
    } else if (name == "fit") {
      if (iters) {
        config.fit.n_iter = *iters;
      }
      if (tau) {
        config.fit.tau = *tau;
      }
      if (eta) {
        config.fit.eta = *eta;
      }
      const BlendshapeModel model = load_model(model_path);
      const auto n = model.global.templ.num_vertices();
      std::optional<VertexMask> occlusion;
      if (!mask_path.empty()) {
        occlusion = load_mask(mask_path);
      }
      Observation obs;
      if (mode == "dense") {
        require(!target_path.empty(), "fit: --target is required in dense mode");
        Mesh target = load_obj(target_path);
        require(target.num_vertices() == n, "fit: target has " + std::to_string(target.num_vertices()) +
                                              " vertices, model has " + std::to_string(n));
        obs = Observation::dense(std::move(target), VertexMask(n, true), occlusion);
      } else {
        require(!landmarks_path.empty(), "fit: --landmarks is required in sparse mode");
        obs = load_landmarks(landmarks_path);
        obs.occlusion = occlusion;
      }
      const FitResult result = fit_partial(model, obs, config.fit);
      write_fit(out_dir, result);
      write_run_lock(out_dir, config);
      out << "final loss " << fmt_double(result.loss_trace.back()) << "\n";
    } else if (name == "complete") {
      if (num_samples) {
        config.diversify.num_samples = *num_samples;
      }
      if (iters) {
        config.diversify.n_comp = *iters;
      }
      if (lambda_s) {
        config.diversify.lambda_s = *lambda_s;
      }
      if (lambda_dpp) {
        config.diversify.lambda_dpp = *lambda_dpp;
      }
      if (eta) {
        config.diversify.eta = *eta;
      }
      config.validate();
      const LatentModel latent = load_latent_model(latent_path);
      const Mesh partial = load_obj(fit_mesh_path(fit_path));
      if (!model_path.empty()) {
        require(load_model(model_path).global.templ.num_vertices() == partial.num_vertices(),
          "complete: fit mesh does not match the blendshape model");
      }
      const VertexMask occlusion = load_mask(mask_path);
      DiversifyHyper hyper = config.diversify;
      hyper.seed = seed ? *seed : stage_seed(config, "pipeline");
      const CompletionSet set = optimize_completions(latent, partial, occlusion, hyper);
      write_completions(out_dir, set, dump_kernel ? &latent : nullptr);
      write_run_lock(out_dir, config);
      out << "wrote " << set.completions.size() << " completions to " << out_dir << "\n";
    } else if (name == "interpolate") {
      const LatentModel latent = load_latent_model(latent_path);
      const auto rows = read_csv_numbers(std::filesystem::path(completions_dir) / "latents.csv");
      auto pick = [&](int idx) {
        require(idx >= 0 && static_cast<std::size_t>(idx) < rows.size(),
          "interpolate: completion index " + std::to_string(idx) + " out of range");
        const auto & r = rows[static_cast<std::size_t>(idx)];
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
      };
      const auto meshes = interpolate(latent, pick(z1_from), pick(z2_from), steps);
      std::filesystem::create_directories(out_dir);
      for (std::size_t i = 0; i < meshes.size(); ++i) {
        save_obj(meshes[i], std::filesystem::path(out_dir) / indexed("interp_%02zu.obj", i));
      }
      out << "wrote " << meshes.size() << " interpolated meshes to " << out_dir << "\n";
    } else if (name == "metrics") {
      const Mesh gt = load_obj(gt_path);
      std::vector<Mesh> preds;
      for (const auto & p : pred_paths) {
        preds.push_back(load_obj(p));
      }
      double mean_mse = 0.0;
      for (const auto & p : preds) {
        mean_mse += mse(p, gt);
      }
      mean_mse /= static_cast<double>(preds.size());
      double asd_v = 0.0;
      double asd_o = 0.0;
      if (!mask_path.empty() && preds.size() >= 2) {
        const VertexMask occlusion = load_mask(mask_path);
        asd_v = asd(preds, occlusion.complement());
        asd_o = asd(preds, occlusion);
      }
      std::ostringstream csv;
      csv << "MSE,CSE,ASD_V,ASD_O\n"
          << fmt_double(mean_mse) << "," << fmt_double(cse(preds, gt)) << "," << fmt_double(asd_v) << ","
          << fmt_double(asd_o) << "\n";
      if (out_path.empty()) {
        out << csv.str();
      } else {
        auto f = open_out(out_path);
        f << csv.str();
      }
    } else if (name == "benchmark") {
      if (jobs) {
        config.benchmark.jobs = *jobs;
      }
      if (instances) {
        config.benchmark_instances = *instances;
      }
      if (!model_path.empty()) {
        config.paths.model = model_path;
      }
      if (!latent_path.empty()) {
        config.paths.latent_model = latent_path;
      }
      const BenchmarkReport report = execute_benchmark(config, out_dir);
      std::ostringstream summary;
      report.write_summary_csv(summary);
      out << summary.str();
    } else if (name == "pipeline") {
      return run_pipeline(config, out, err);
    }
    return 0;
  } catch (const NumericError & e) {
    err << "divface " << name << ": numeric error: " << e.what() << "\n";
    return 1;
  } catch (const InputError & e) {
    err << "divface " << name << ": input error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error & e) {
    err << "divface " << name << ": input error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace divface
