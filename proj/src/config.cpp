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

#include "divface/config.hpp"

#include "divface/error.hpp"
#include "divface/random.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>
#include <vector>

namespace divface
{

namespace
{

using Slot = std::variant<double *, int *, bool *, std::string *, std::uint64_t *, std::vector<double> *>;

struct Binding
{
  const char * section;
  const char * key;
  Slot slot;
};

std::vector<Binding> bindings(RunConfig & c)
{
  return {
    {"run", "seed", &c.seed},
    {"synth", "subdivisions", &c.synth.subdivisions},
    {"synth", "n_shape", &c.synth.n_shape},
    {"synth", "n_expr", &c.synth.n_expr},
    {"synth", "coeff_sigma", &c.synth.coeff_sigma},
    {"synth", "bump_width", &c.synth.bump_width},
    {"synth", "spectrum_decay", &c.synth.spectrum_decay},
    {"synth", "subjects", &c.synth.subjects},
    {"synth", "expressions_per_subject", &c.synth.expressions_per_subject},
    {"synth", "test_count", &c.synth.test_count},
    {"model", "global_shape", &c.model.global_shape},
    {"model", "global_expr", &c.model.global_expr},
    {"model", "coarse_shape", &c.model.coarse.shape},
    {"model", "coarse_expr", &c.model.coarse.expr},
    {"model", "local_shape", &c.model.local.shape},
    {"model", "local_expr", &c.model.local.expr},
    {"model", "unpose", &c.model.unpose},
    {"latent", "variant", &c.latent.variant},
    {"latent", "latent_dim", &c.latent.latent_dim},
    {"latent", "min_noise_ratio", &c.latent.min_noise_ratio},
    {"latent", "prior_var", &c.latent.prior_var},
    {"vae", "epochs", &c.vae.epochs},
    {"vae", "batch_size", &c.vae.batch_size},
    {"vae", "step_size", &c.vae.step_size},
    {"vae", "kl_weight", &c.vae.kl_weight},
    {"vae", "laplacian_weight", &c.vae.laplacian_weight},
    {"curriculum", "start_fraction", &c.vae.curriculum.start_fraction},
    {"curriculum", "end_fraction", &c.vae.curriculum.end_fraction},
    {"curriculum", "ramp_epochs", &c.vae.curriculum.ramp_epochs},
    {"fit", "tau", &c.fit.tau},
    {"fit", "n_iter", &c.fit.n_iter},
    {"fit", "lambda_landmark", &c.fit.lambda_landmark},
    {"fit", "lambda_data", &c.fit.lambda_data},
    {"fit", "lambda_reg", &c.fit.lambda_reg},
    {"fit", "eta", &c.fit.eta},
    {"fit", "rigid_unit", &c.fit.rigid_unit},
    {"diversify", "num_samples", &c.diversify.num_samples},
    {"diversify", "n_comp", &c.diversify.n_comp},
    {"diversify", "lambda_s", &c.diversify.lambda_s},
    {"diversify", "lambda_dpp", &c.diversify.lambda_dpp},
    {"diversify", "eta", &c.diversify.eta},
    {"diversify", "k", &c.diversify.k},
    {"diversify", "disable_quality", &c.diversify.disable_quality},
    {"benchmark", "instances", &c.benchmark_instances},
    {"benchmark", "fractions", &c.benchmark.fractions},
    {"benchmark", "jobs", &c.benchmark.jobs},
    {"benchmark", "dump_instances", &c.benchmark.dump_instances},
    {"pipeline", "mode", &c.pipeline.mode},
    {"pipeline", "occlusion_fraction", &c.pipeline.occlusion_fraction},
    {"pipeline", "test_index", &c.pipeline.test_index},
    {"paths", "model", &c.paths.model},
    {"paths", "latent_model", &c.paths.latent_model},
    {"paths", "target", &c.paths.target},
    {"paths", "occlusion_mask", &c.paths.occlusion_mask},
    {"paths", "landmarks", &c.paths.landmarks},
    {"paths", "output_dir", &c.paths.output_dir},
  };
}

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string & text, T & out)
{
  const char * first = text.data();
  const char * last = text.data() + text.size();
  if constexpr (std::is_floating_point_v<T>) {
    if (!text.empty() && text.front() == '+') {
      ++first;
    }
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

void assign(const Slot & slot, const std::string & value, const std::string & where)
{
  auto fail = [&](const char * what) { throw InputError(where + ": expected " + what + ", got '" + value + "'"); };
  std::visit(
    [&](auto * target) {
      using T = std::remove_pointer_t<decltype(target)>;
      if constexpr (std::is_same_v<T, std::string>) {
        *target = value;
      } else if constexpr (std::is_same_v<T, bool>) {
        if (value == "true" || value == "1") {
          *target = true;
        } else if (value == "false" || value == "0") {
          *target = false;
        } else {
          fail("a boolean (true/false)");
        }
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        std::vector<double> list;
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          double x = 0.0;
          if (!parse_number(trim(item), x)) {
            fail("a comma-separated list of numbers");
          }
          list.push_back(x);
        }
        if (list.empty()) {
          fail("a non-empty list");
        }
        *target = std::move(list);
      } else if constexpr (std::is_same_v<T, double>) {
        if (!parse_number(value, *target)) {
          fail("a number");
        }
      } else if constexpr (std::is_same_v<T, int>) {
        if (!parse_number(value, *target)) {
          fail("an integer");
        }
      } else {
        if (!parse_number(value, *target)) {
          fail("a non-negative integer");
        }
      }
    },
    slot);
}

std::string format(const Slot & slot)
{
  char buf[64];
  return std::visit(
    [&](auto * target) -> std::string {
      using T = std::remove_pointer_t<decltype(target)>;
      if constexpr (std::is_same_v<T, std::string>) {
        return *target;
      } else if constexpr (std::is_same_v<T, bool>) {
        return *target ? "true" : "false";
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        std::string out;
        for (std::size_t i = 0; i < target->size(); ++i) {
          std::snprintf(buf, sizeof(buf), "%.17g", (*target)[i]);
          out += (i ? ", " : "") + std::string(buf);
        }
        return out;
      } else if constexpr (std::is_same_v<T, double>) {
        std::snprintf(buf, sizeof(buf), "%.17g", *target);
        return buf;
      } else if constexpr (std::is_same_v<T, int>) {
        return std::to_string(*target);
      } else {
        return std::to_string(*target);
      }
    },
    slot);
}

}  // namespace

void RunConfig::validate() const
{
  require(synth.subdivisions >= 0 && synth.subdivisions <= 5, "config: synth.subdivisions must lie in [0, 5]");
  require(synth.n_shape >= 1 && synth.n_expr >= 1, "config: synth field counts must be >= 1");
  require(synth.coeff_sigma >= 0.0, "config: synth.coeff_sigma must be >= 0");
  require(synth.subjects >= 1 && synth.expressions_per_subject >= 0 && synth.test_count >= 1,
    "config: synth sample counts must be positive");
  require(model.global_shape >= 1 && model.global_expr >= 1, "config: global ranks must be >= 1");
  require(model.coarse.shape >= 0 && model.coarse.shape <= model.global_shape && model.coarse.expr >= 0 &&
            model.coarse.expr <= model.global_expr,
    "config: coarse ranks must lie between 0 and the global ranks");
  require(model.local.shape >= 0 && model.local.expr >= 0, "config: local ranks must be >= 0");
  require(latent.variant == "linear" || latent.variant == "mlp", "config: latent.variant must be linear or mlp");
  require(latent.latent_dim >= 1, "config: latent.latent_dim must be >= 1");
  require(pipeline.mode == "dense" || pipeline.mode == "sparse", "config: pipeline.mode must be dense or sparse");
  require(pipeline.occlusion_fraction > 0.0 && pipeline.occlusion_fraction <= 0.9,
    "config: pipeline.occlusion_fraction must lie in (0, 0.9]");
  require(pipeline.test_index >= 0 && pipeline.test_index < synth.test_count,
    "config: pipeline.test_index must index a synthetic test sample");
  require(benchmark_instances >= 1, "config: benchmark.instances must be >= 1");
  require(benchmark.jobs >= 1 && benchmark.dump_instances >= 0, "config: benchmark.jobs must be >= 1");
  for (double f : benchmark.fractions) {
    require(f >= 0.0 && f <= 0.9, "config: benchmark.fractions must lie in [0, 0.9]");
  }
  require(!paths.output_dir.empty(), "config: paths.output_dir must not be empty");
  VaeTrainConfig v = vae;
  v.latent_dim = latent.latent_dim;
  v.validate();
  fit.validate();
  diversify.validate();
}

std::string RunConfig::canonical() const
{
  RunConfig copy = *this;
  std::string out;
  std::string section;
  for (const auto & b : bindings(copy)) {
    if (section != b.section) {
      section = b.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(b.key) + " = " + format(b.slot) + "\n";
  }
  return out;
}

RunConfig parse_config_text(std::string_view text, const std::string & source)
{
  RunConfig config;
  auto table = bindings(config);
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const std::string line = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.empty() || line.front() == '#' || line.front() == ';') {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw InputError(where + ": malformed section header '" + line + "'");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      bool known = false;
      for (const auto & b : table) {
        known = known || section == b.section;
      }
      if (!known) {
        throw InputError(where + ": unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(where + ": expected `key = value`");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) {
      throw InputError(where + ": key '" + key + "' appears before any section");
    }
    const Binding * match = nullptr;
    for (const auto & b : table) {
      if (section == b.section && key == b.key) {
        match = &b;
      }
    }
    if (!match) {
      throw InputError(where + ": unknown key '" + key + "' in section [" + section + "]");
    }
    assign(match->slot, value, where + ": " + section + "." + key);
  }
  config.vae.latent_dim = config.latent.latent_dim;
  config.validate();
  return config;
}

RunConfig parse_config(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open config file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::uint64_t stage_seed(const RunConfig & config, std::string_view stage)
{
  return derive_seed(config.seed, stage);
}

}  // namespace divface
