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
#include "divface/config.hpp"
#include "divface/error.hpp"
#include "divface/mesh.hpp"
#include "divface/synthetic.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace divface;
using divface::testing::TempDir;

namespace
{

const char * kTiny = R"([run]
seed = 7
[synth]
subdivisions = 2
n_shape = 6
n_expr = 6
subjects = 12
expressions_per_subject = 3
test_count = 4
[model]
global_shape = 4
global_expr = 4
coarse_shape = 2
coarse_expr = 2
local_shape = 3
local_expr = 3
[latent]
latent_dim = 12
[fit]
n_iter = 60
[diversify]
num_samples = 3
n_comp = 20
[benchmark]
instances = 2
fractions = 0.3
jobs = 2
)";

struct Cli
{
  int status = 0;
  std::string out;
  std::string err;
};

Cli cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "divface");
  std::ostringstream out;
  std::ostringstream err;
  Cli r;
  r.status = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config gives defaults")
{
  const RunConfig c = parse_config_text("");
  const RunConfig d;
  CHECK(c.canonical() == d.canonical());
  CHECK(c.diversify.lambda_dpp == 1.0);
  CHECK(c.seed == 0);
}

TEST_CASE("config overrides and round trip")
{
  const RunConfig c = parse_config_text("[diversify]\nlambda_dpp = 0.5\n[benchmark]\nfractions = 0.1, 0.3\n");
  CHECK(c.diversify.lambda_dpp == 0.5);
  CHECK(c.benchmark.fractions == std::vector<double>{0.1, 0.3});
  CHECK(parse_config_text(c.canonical()).canonical() == c.canonical());

  RunConfig odd;
  odd.fit.eta = 0.1 + 0.2;
  CHECK(parse_config_text(odd.canonical()).fit.eta == odd.fit.eta);
}

TEST_CASE("config errors name the key and line")
{
  try {
    parse_config_text("[diversify]\n\nlamda_dpp = 1\n", "x.ini");
    FAIL("no error");
  } catch (const InputError & e) {
    const std::string msg = e.what();
    CHECK(msg.find("lamda_dpp") != std::string::npos);
    CHECK(msg.find("x.ini:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_text("[fit]\nn_iter = many\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("[fit]\nn_iter = 1.5\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("[nowhere]\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("seed = 1\n"), InputError);
  CHECK_THROWS_AS(parse_config_text("[diversify]\nnum_samples = 1\n"), InputError);
  CHECK_THROWS_AS(parse_config(std::filesystem::path("/nonexistent/cfg.ini")), InputError);
}

TEST_CASE("stage seeds differ and are stable")
{
  RunConfig c;
  c.seed = 3;
  CHECK(stage_seed(c, "train") != stage_seed(c, "test"));
  CHECK(stage_seed(c, "train") == stage_seed(c, "train"));
}

TEST_CASE("cli argument and input errors exit with status 2")
{
  CHECK(cli({}).status == 2);
  CHECK(cli({"frobnicate"}).status == 2);
  CHECK(cli({"fit", "--out", "/tmp/x"}).status == 2);
  const Cli missing = cli({"fit", "--model", "/nonexistent/model.dsc", "--target", "/nonexistent/t.obj", "--out", "/tmp/x"});
  CHECK(missing.status == 2);
  CHECK(missing.err.find("/nonexistent/") != std::string::npos);
}

TEST_CASE("cli end to end")
{
  TempDir dir("cli");
  {
    std::ofstream(dir / "tiny.ini") << kTiny;
  }
  const std::string cfg = (dir / "tiny.ini").string();
  REQUIRE(cli({"synth", "--config", cfg, "--out-dir", (dir / "data").string()}).status == 0);
  CHECK(std::filesystem::exists(dir / "data" / "run.lock"));
  REQUIRE(cli({"train-blendshape", "--config", cfg, "--data-dir", (dir / "data" / "train").string(), "--out",
            (dir / "model.dsc").string()})
            .status == 0);
  REQUIRE(cli({"train-latent", "--config", cfg, "--data-dir", (dir / "data" / "train").string(), "--out",
            (dir / "latent.dsc").string()})
            .status == 0);

  const Mesh target = load_obj(dir / "data" / "test" / "sample_0000.obj");
  const VertexMask occ = grow_occlusion(target, 0.3, 1);
  save_mask(occ, dir / "occ.txt");
  REQUIRE(cli({"fit", "--model", (dir / "model.dsc").string(), "--target",
            (dir / "data" / "test" / "sample_0000.obj").string(), "--occlusion-mask", (dir / "occ.txt").string(),
            "--iters", "60", "--out", (dir / "fit").string()})
            .status == 0);
  CHECK(std::filesystem::exists(dir / "fit" / "fit.obj"));
  CHECK(std::filesystem::exists(dir / "fit" / "fit_params.dsc"));

  REQUIRE(cli({"complete", "--latent-model", (dir / "latent.dsc").string(), "--fit", (dir / "fit").string(),
            "--occlusion-mask", (dir / "occ.txt").string(), "--num-samples", "3", "--iters", "20", "--out-dir",
            (dir / "comp").string(), "--dump-kernel"})
            .status == 0);
  CHECK(std::filesystem::exists(dir / "comp" / "completion_02.obj"));
  CHECK(std::filesystem::exists(dir / "comp" / "kernel_final.txt"));

  const Cli bad_m = cli({"complete", "--latent-model", (dir / "latent.dsc").string(), "--fit",
    (dir / "fit").string(), "--occlusion-mask", (dir / "occ.txt").string(), "--num-samples", "1", "--out-dir",
    (dir / "comp1").string()});
  CHECK(bad_m.status == 2);

  REQUIRE(cli({"interpolate", "--latent-model", (dir / "latent.dsc").string(), "--completions",
            (dir / "comp").string(), "--z1-from", "0", "--z2-from", "1", "--steps", "4", "--out-dir",
            (dir / "interp").string()})
            .status == 0);
  CHECK(std::filesystem::exists(dir / "interp" / "interp_03.obj"));

  const Cli m = cli({"metrics", "--gt", (dir / "data" / "test" / "sample_0000.obj").string(), "--pred",
    (dir / "comp" / "completion_00.obj").string(), "--pred", (dir / "comp" / "completion_01.obj").string(),
    "--occlusion-mask", (dir / "occ.txt").string()});
  CHECK(m.status == 0);
  CHECK(m.out.rfind("MSE,CSE,ASD_V,ASD_O\n", 0) == 0);

  const Cli self = cli({"metrics", "--gt", (dir / "data" / "test" / "sample_0000.obj").string(), "--pred",
    (dir / "data" / "test" / "sample_0000.obj").string()});
  CHECK(self.status == 0);
}

TEST_CASE("benchmark output is byte-identical across runs and job counts")
{
  TempDir dir("bench");
  {
    std::ofstream(dir / "tiny.ini") << kTiny;
  }
  const std::string cfg = (dir / "tiny.ini").string();
  REQUIRE(cli({"benchmark", "--config", cfg, "--out-dir", (dir / "a").string()}).status == 0);
  REQUIRE(cli({"benchmark", "--config", cfg, "--out-dir", (dir / "b").string(), "--jobs", "1"}).status == 0);
  for (const char * f : {"report.csv", "summary.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const RunConfig locked = parse_config(dir / "a" / "run.lock");
  CHECK(locked.seed == 7);
  CHECK(locked.synth.subjects == 12);
}
