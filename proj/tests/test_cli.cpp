#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "neurotopo/cli/commands.hpp"
#include "neurotopo/cli/feature_store.hpp"
#include "neurotopo/util/io.hpp"
#include "neurotopo/util/sha256.hpp"

using namespace neurotopo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("neurotopo_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

cli::SynthOptions tiny_synth(const fs::path& out) {
  cli::SynthOptions o;
  o.users = 3;
  o.songs = 3;
  o.duration_s = 12.0;
  o.channels = 16;
  o.seed = 7;
  o.out = out.string();
  o.command_line = "test";
  return o;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(NEUROTOPO_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("synth command writes a loadable dataset and refuses to clobber") {
  const fs::path dir = fresh_dir("synth");
  const auto opts = tiny_synth(dir / "ds");
  cli::cmd_synth(opts);

  const data::Dataset ds = data::load_dataset(dir / "ds");
  CHECK(ds.recordings.size() == 9);
  CHECK(ds.channels == 16);
  REQUIRE(fs::exists(dir / "ds" / "run_manifest.json"));
  const auto manifest =
      nlohmann::json::parse(io::read_text_file(dir / "ds" / "run_manifest.json"));
  CHECK(manifest.at("command") == "test");
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("library_version") == std::string(kVersion));
  CHECK(manifest.at("artifacts").size() == 2 + 9 + 1);

  REQUIRE_THROWS_WITH(cli::cmd_synth(opts),
                      Catch::Matchers::ContainsSubstring("not empty"));

  // same seed in a second directory: bit-identical artifacts
  auto again = tiny_synth(dir / "ds2");
  cli::cmd_synth(again);
  CHECK(io::sha256_of_file(dir / "ds" / "rec_u002_s001.eegr") ==
        io::sha256_of_file(dir / "ds2" / "rec_u002_s001.eegr"));
  CHECK(io::read_text_file(dir / "ds" / "manifest.json") ==
        io::read_text_file(dir / "ds2" / "manifest.json"));
}

TEST_CASE("featurize command emits image tensors, an index, and previews") {
  const fs::path dir = fresh_dir("feat");
  cli::cmd_synth(tiny_synth(dir / "ds"));

  cli::FeaturizeOptions fo;
  fo.in = (dir / "ds").string();
  fo.out = (dir / "feat").string();
  fo.resolution = 8;
  fo.command_line = "test";
  cli::cmd_featurize(fo);

  const cli::FeatureIndex index = cli::load_feature_index(dir / "feat");
  CHECK(index.width == 8);
  CHECK(index.height == 8);
  CHECK(index.bands == 5);
  CHECK(index.entries.size() == 9 * 2);  // 12 s, 5 s chunks -> 2 per recording
  CHECK(index.band_names == std::vector<std::string>{"delta", "theta", "alpha",
                                                     "beta", "gamma"});

  const topo::TopographicImage img =
      cli::read_image_file(dir / "feat" / index.entries[0].path);
  CHECK(img.width == 8);
  CHECK(img.bands == 5);
  std::size_t inside = 0;
  for (auto m : img.mask) inside += m;
  CHECK(inside > 16);

  REQUIRE(fs::exists(dir / "feat" / "preview_u000_s000.svg"));
  const std::string svg = io::read_text_file(dir / "feat" / "preview_u000_s000.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("delta") != std::string::npos);

  const eval::LabeledDataset loaded = cli::load_feature_dataset(dir / "feat");
  CHECK(loaded.size() == 18);
  CHECK(loaded.image_size() == 5u * 8u * 8u);
  CHECK(loaded.ratings.size() == 9);
  REQUIRE_NOTHROW(loaded.validate());

  // determinism: a second featurize run produces identical bytes
  cli::FeaturizeOptions fo2 = fo;
  fo2.out = (dir / "feat2").string();
  cli::cmd_featurize(fo2);
  CHECK(io::sha256_of_file(dir / "feat" / index.entries[3].path) ==
        io::sha256_of_file(dir / "feat2" / index.entries[3].path));
  CHECK(io::read_text_file(dir / "feat" / "index.json") ==
        io::read_text_file(dir / "feat2" / "index.json"));
}

TEST_CASE("image tensor files reject corruption") {
  const fs::path dir = fresh_dir("ntim");
  topo::TopographicImage img;
  img.width = 2;
  img.height = 2;
  img.bands = 1;
  img.pixels = {1.0, 2.0, 3.0, 4.0};
  img.mask = {1, 1, 0, 1};
  cli::write_image_file(dir / "a.ntim", img);
  const topo::TopographicImage back = cli::read_image_file(dir / "a.ntim");
  CHECK(back.pixels == img.pixels);
  CHECK(back.mask == img.mask);

  auto bytes = io::read_file(dir / "a.ntim");
  bytes[0] = 'X';
  io::write_file_atomic(dir / "bad_magic.ntim", bytes);
  REQUIRE_THROWS_WITH(cli::read_image_file(dir / "bad_magic.ntim"),
                      Catch::Matchers::ContainsSubstring("not an image tensor file"));

  bytes = io::read_file(dir / "a.ntim");
  bytes.resize(bytes.size() - 3);
  io::write_file_atomic(dir / "short.ntim", bytes);
  REQUIRE_THROWS_WITH(cli::read_image_file(dir / "short.ntim"),
                      Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("run and report commands produce consistent artifacts") {
  const fs::path dir = fresh_dir("run");
  cli::cmd_synth(tiny_synth(dir / "ds"));
  cli::FeaturizeOptions fo;
  fo.in = (dir / "ds").string();
  fo.out = (dir / "feat").string();
  fo.resolution = 8;
  fo.command_line = "test";
  cli::cmd_featurize(fo);

  cli::RunOptions ro;
  ro.experiment = "user-id-kfold";
  ro.features = fo.out;
  ro.out = (dir / "run1").string();
  ro.epochs = 3;
  ro.kfolds = 3;
  ro.seed = 3;
  ro.command_line = "test";
  cli::cmd_run(ro);

  REQUIRE(fs::exists(dir / "run1" / "metrics.json"));
  REQUIRE(fs::exists(dir / "run1" / "figure.svg"));
  REQUIRE(fs::exists(dir / "run1" / "run_manifest.json"));
  const auto metrics =
      nlohmann::json::parse(io::read_text_file(dir / "run1" / "metrics.json"));
  CHECK(metrics.at("experiment") == "user-id-kfold");
  CHECK(metrics.at("class_count") == 3);
  CHECK(metrics.at("per_fold").size() == 3);
  CHECK(metrics.at("aggregate").contains("accuracy"));
  const std::string figure = io::read_text_file(dir / "run1" / "figure.svg");
  CHECK(figure.rfind("<svg", 0) == 0);
  CHECK(figure.find("chance") != std::string::npos);

  // byte-identical rerun
  cli::RunOptions ro2 = ro;
  ro2.out = (dir / "run1b").string();
  cli::cmd_run(ro2);
  CHECK(io::read_text_file(dir / "run1" / "metrics.json") ==
        io::read_text_file(dir / "run1b" / "metrics.json"));
  CHECK(io::read_text_file(dir / "run1" / "figure.svg") ==
        io::read_text_file(dir / "run1b" / "figure.svg"));

  cli::ReportOptions rep;
  rep.runs = {(dir / "run1").string(), (dir / "run1b").string()};
  rep.out = (dir / "summary").string();
  rep.command_line = "test";
  cli::cmd_report(rep);
  const auto summary =
      nlohmann::json::parse(io::read_text_file(dir / "summary" / "report.json"));
  REQUIRE(summary.at("runs").size() == 2);
  CHECK(summary.at("runs")[0].at("aggregate") == summary.at("runs")[1].at("aggregate"));

  cli::ReportOptions missing;
  missing.runs = {(dir / "nope").string()};
  REQUIRE_THROWS_WITH(cli::cmd_report(missing),
                      Catch::Matchers::ContainsSubstring("no run_manifest.json"));
}

TEST_CASE("binary maps outcomes to exit codes") {
  const fs::path dir = fresh_dir("bin");
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("--version") == 0);
  CHECK(run_binary("synth --no-such-flag") == 2);
  CHECK(run_binary("synth --users 1 --out " + (dir / "bad").string()) == 2);

  const std::string ds = (dir / "ds").string(), feat = (dir / "feat").string();
  REQUIRE(run_binary("synth --users 3 --songs 3 --duration-s 12 --channels 16 --seed 7 --out " + ds) == 0);
  CHECK(run_binary("synth --users 3 --songs 3 --out " + ds) == 2);  // non-empty
  REQUIRE(run_binary("featurize --in " + ds + " --out " + feat + " --resolution 8") == 0);
  REQUIRE(run_binary("run --experiment song-id-louo --features " + feat + " --out " +
                     (dir / "r1").string() + " --epochs 2 --seed 1") == 0);
  CHECK(run_binary("report --runs " + (dir / "r1").string()) == 0);
  CHECK(run_binary("report --runs " + (dir / "r1").string() + " " +
                   (dir / "never").string()) == 2);
  CHECK(run_binary("run --experiment user-id-kfold --features " + feat + " --out " +
                   (dir / "rdiv").string() +
                   " --epochs 10 --kfolds 3 --optimizer sgd --lr 1e12") == 3);
}
