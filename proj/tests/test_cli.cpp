#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

#include "daugs/cli.hpp"
#include "daugs/report.hpp"
#include "daugs/tensor_io.hpp"
#include "fixtures.hpp"

using namespace daugs;
namespace fs = std::filesystem;

namespace {

int daugs_cli(const std::string& args) {
  const std::string cmd = std::string(DAUGS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<SegmenterSpec> small_pool() {
  std::vector<SegmenterSpec> pool(3);
  pool[1].kind = pool[2].kind = SegmenterKind::PerturbedOracle;
  for (int i = 0; i < 3; ++i) pool[i].model_id = i;
  pool[1].perturb = {1.0, 0.01, 0.5};
  pool[2].perturb = {2.0, 0.05, 1.0};
  pool[1].validation_dice = 0.9;
  return pool;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("phantom writes a self-describing cohort") {
    const auto dir = test::scratch_dir("cli_phantom");
    REQUIRE(daugs_cli("phantom --n 3 --seed 1 --jobs 1 --out " + dir.string()) == 0);
    CHECK(read_csv(dir / "manifest.csv").rows.size() == 3);
    CHECK(read_csv(dir / "summary.csv").rows.size() == 3);
    CHECK(slurp(dir / "format.txt").find("daugs-output 1") == 0);
    CHECK(slurp(dir / "config.ini").find("seed=1") != std::string::npos);
    CHECK(fs::exists(dir / "case00002_series.fpt"));
  }

  TEST_CASE("config file values yield to flags") {
    const auto dir = test::scratch_dir("cli_config");
    write_text(dir / "c.ini", "seed=7\n");
    REQUIRE(daugs_cli("--config " + (dir / "c.ini").string() + " phantom --n 1 --out " + (dir / "a").string()) == 0);
    CHECK(slurp(dir / "a" / "config.ini").find("seed=7") != std::string::npos);
    REQUIRE(daugs_cli("--config " + (dir / "c.ini").string() + " --seed 9 phantom --n 1 --out " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "b" / "config.ini").find("seed=9") != std::string::npos);
  }

  TEST_CASE("run twice gives byte-identical summaries") {
    const auto dir = test::scratch_dir("cli_run");
    REQUIRE(daugs_cli("phantom --n 2 --out " + (dir / "d").string()) == 0);
    cli::write_pool_cfg(dir / "pool.cfg", small_pool());
    const std::string common = "--umap-stride 16 --pool " + (dir / "pool.cfg").string() + " run --manifest " +
                               (dir / "d" / "manifest.csv").string();
    REQUIRE(daugs_cli("--jobs 1 --out " + (dir / "r1").string() + " " + common) == 0);
    REQUIRE(daugs_cli("--jobs 3 --out " + (dir / "r2").string() + " " + common) == 0);
    const std::string a = slurp(dir / "r1" / "summary.csv");
    CHECK(a == slurp(dir / "r2" / "summary.csv"));
    CHECK(read_csv(dir / "r1" / "summary.csv").rows.size() == 6);
    CHECK(fs::exists(dir / "r1" / "cases" / "case00000" / "model_2" / "umap.fpt"));
    CHECK(cli::read_pool_cfg(dir / "r1" / "pool.cfg").size() == 3);

    REQUIRE(daugs_cli("--out " + (dir / "s").string() + " select --run-dir " + (dir / "r1").string()) == 0);
    CHECK(read_csv(dir / "s" / "summary.csv").cell(0, "model_id") == "0");
    REQUIRE(daugs_cli("--out " + (dir / "e").string() + " eval --manifest " + (dir / "d" / "manifest.csv").string() +
                      " --run-dir " + (dir / "r1").string() + " --selection " + (dir / "s" / "summary.csv").string()) == 0);
    const Csv ev = read_csv(dir / "e" / "summary.csv");
    CHECK(ev.rows.size() == 6);
    CHECK(ev.cell(0, "dice_myo") == "1");
  }

  TEST_CASE("select by upp and utot on the metric fixture") {
    const auto dir = test::scratch_dir("cli_select");
    const auto fx = test::metric_fixture();
    for (const auto& s : fx.solutions) {
      const fs::path m = dir / "run" / "cases" / fx.c.name / ("model_" + std::to_string(s.model_id));
      fs::create_directories(m);
      write_fpt(m / "mask.fpt", to_tensor(s.mask));
      write_fpt(m / "umap.fpt", to_tensor(s.umap));
      write_fpt(m / "probs.fpt", to_tensor(s.mean_probs));
    }
    const std::string run = " select --run-dir " + (dir / "run").string();
    REQUIRE(daugs_cli("--metric upp --out " + (dir / "a").string() + run) == 0);
    REQUIRE(daugs_cli("--metric utot --out " + (dir / "b").string() + run) == 0);
    CHECK(read_csv(dir / "a" / "summary.csv").cell(0, "model_id") == "0");
    CHECK(read_csv(dir / "b" / "summary.csv").cell(0, "model_id") == "1");

    cli::write_pool_cfg(dir / "pool.cfg", {small_pool()[2]});
    CHECK(daugs_cli("--pool " + (dir / "pool.cfg").string() + " --out " + (dir / "c").string() + run +
                    " --method established") == 2);
  }

  TEST_CASE("exit codes") {
    const auto dir = test::scratch_dir("cli_exit");
    CHECK(daugs_cli("--no-such-flag phantom") == 1);
    CHECK(daugs_cli("frobnicate") == 1);
    CHECK(daugs_cli("") == 1);
    CHECK(daugs_cli("--help") == 0);
    CHECK(daugs_cli("--out " + dir.string() + " run --manifest " + (dir / "missing.csv").string()) == 2);
    REQUIRE(daugs_cli("phantom --n 1 --out " + (dir / "d").string()) == 0);
    CHECK(daugs_cli("--umap-stride 32 --backend '" + std::string(DAUGS_FAKE_BACKEND) + " crash' --out " +
                    (dir / "r").string() + " run --manifest " + (dir / "d" / "manifest.csv").string()) == 3);
  }

  TEST_CASE("pool.cfg round trip") {
    const auto dir = test::scratch_dir("poolcfg");
    auto pool = small_pool();
    SegmenterSpec curve;
    curve.kind = SegmenterKind::CurveMatching;
    curve.model_id = 8;
    curve.run_id = 1;
    curve.checkpoint_id = 4;
    curve.curve = phantom_prototypes(PhantomSpec{});
    curve.curve.temperature = 0.5;
    SegmenterSpec ext;
    ext.kind = SegmenterKind::External;
    ext.model_id = 9;
    ext.external = {"python3 backend.py --x 1", 12.5};
    pool.push_back(curve);
    pool.push_back(ext);
    cli::write_pool_cfg(dir / "pool.cfg", pool);
    const auto back = cli::read_pool_cfg(dir / "pool.cfg");
    REQUIRE(back.size() == pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      CHECK(back[i].kind == pool[i].kind);
      CHECK(back[i].model_id == pool[i].model_id);
      CHECK(back[i].validation_dice == pool[i].validation_dice);
      CHECK(back[i].perturb.boundary_jitter_px == pool[i].perturb.boundary_jitter_px);
    }
    CHECK(back[3].run_id == 1);
    CHECK(back[3].curve.temperature == 0.5);
    for (int k = 0; k < 3; ++k)
      for (std::size_t t = 0; t < 30; ++t)
        CHECK(back[3].curve.prototypes[k][t] == doctest::Approx(curve.curve.prototypes[k][t]).epsilon(1e-9));
    CHECK(back[4].external.command == "python3 backend.py --x 1");
    CHECK(back[4].external.timeout_s == 12.5);

    write_text(dir / "bad.cfg", "[m]\nkind = unet\nmodel_id = 1\n");
    CHECK_THROWS_AS(cli::read_pool_cfg(dir / "bad.cfg"), DataError);
    write_text(dir / "nokind.cfg", "[m]\nmodel_id = 1\n");
    CHECK_THROWS_AS(cli::read_pool_cfg(dir / "nokind.cfg"), DataError);
  }
}
