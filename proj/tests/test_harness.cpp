#include <catch2/catch_amalgamated.hpp>

#include "babel/harness/report.hpp"
#include "babel/harness/run.hpp"

using namespace babel;
using namespace babel::harness;

namespace {

const char* kSampleToml = R"(
# experiment under test
[experiment]
kind = "mono-train"
output_dir = "runs/demo"
seed = 42
mono_language = "alpha"
sweep_budgets = [1000, 2_000, 3000]

[corpus]
dominant_tokens = 50_000
trace_fraction = 0.02

[model]
n_layers = 2
d_model = 32

[train]
steps = 30
lr = 1.5e-3
seq_len = 16

[probes]
final_only = true
)";

ExperimentConfig micro_config(const std::string& out_dir, std::uint64_t seed) {
  ExperimentConfig c;
  c.kind = ExperimentKind::MonoTrain;
  c.output_dir = out_dir;
  c.seed = seed;
  c.mono_language = "alpha";
  c.dominant_tokens = 12000;
  c.target_tokens = 12000;
  c.model.n_layers = 2;
  c.model.d_model = 32;
  c.model.n_heads = 2;
  c.model.d_ffn = 64;
  c.model.context_length = 32;
  c.train.steps = 40;
  c.train.batch_size = 4;
  c.train.seq_len = 16;
  c.train.save_interval = 20;
  c.probes.every = 1;
  c.probes.per_identifier = 2;
  c.probes.lape_tokens = 256;
  c.probes.eval_max_new = 12;
  c.suite_tasks = 12;
  c.canonical_text = "micro mono seed=" + std::to_string(seed);
  return c;
}

}  // namespace

TEST_CASE("toml subset parser: scalars, arrays, comments, underscores") {
  TomlTable t = TomlTable::parse(kSampleToml);
  CHECK(t.get("experiment", "kind").as_string() == "mono-train");
  CHECK(t.get("experiment", "seed").as_int() == 42);
  CHECK(t.get("corpus", "dominant_tokens").as_int() == 50000);
  CHECK(t.get("corpus", "trace_fraction").as_float() == Catch::Approx(0.02));
  CHECK(t.get("train", "lr").as_float() == Catch::Approx(1.5e-3));
  CHECK(t.get("probes", "final_only").as_bool());
  auto arr = t.get("experiment", "sweep_budgets").as_array();
  REQUIRE(arr.size() == 3);
  CHECK(arr[1].as_int() == 2000);
  CHECK_FALSE(t.has("corpus", "nope"));
  CHECK_THROWS_AS(t.get("corpus", "nope"), Error);
  // ints coerce to float where a float is expected, not the reverse
  CHECK(t.get("experiment", "seed").as_float() == 42.0);
  CHECK_THROWS_AS(t.get("corpus", "trace_fraction").as_int(), Error);

  CHECK_THROWS_AS(TomlTable::parse("key value-without-equals\n"), Error);
  CHECK_THROWS_AS(TomlTable::parse("[unclosed\n"), Error);
  CHECK_THROWS_AS(TomlTable::parse("k = \"bad \\q escape\"\n"), Error);
}

TEST_CASE("canonical text is order-insensitive, so config hashes are too") {
  TomlTable a = TomlTable::parse("[s]\nx = 1\ny = 2\n");
  TomlTable b = TomlTable::parse("[s]\ny = 2\nx = 1\n");
  CHECK(a.canonical() == b.canonical());
  TomlTable c = TomlTable::parse("[s]\nx = 1\ny = 3\n");
  CHECK(a.canonical() != c.canonical());
}

TEST_CASE("experiment config from toml") {
  ExperimentConfig c = ExperimentConfig::from_toml(TomlTable::parse(kSampleToml));
  CHECK(c.kind == ExperimentKind::MonoTrain);
  CHECK(c.seed == 42);
  CHECK(c.model.n_layers == 2);
  CHECK(c.model.n_heads == 4);  // default survives partial [model]
  CHECK(c.train.steps == 30);
  CHECK(c.train.seed == 42);
  CHECK(c.sweep_budgets == std::vector<std::uint64_t>{1000, 2000, 3000});
  CHECK(c.probes.final_only);
  CHECK(!c.config_hash().empty());

  // seed is mandatory
  CHECK_THROWS_AS(ExperimentConfig::from_toml(TomlTable::parse(
                      "[experiment]\nkind = \"mono-train\"\noutput_dir = \"x\"\n")),
                  Error);
  CHECK_THROWS_AS(kind_from_string("nope"), Error);
}

TEST_CASE("manifest round-trip, hash verification, tamper detection") {
  fs::path dir = "test_manifest_tmp";
  fs::create_directories(dir);
  write_atomic((dir / "x.txt").string(), "hello\n");

  RunManifest m;
  m.run_dir = dir.string();
  m.config_hash = sha256_hex("cfg");
  m.kind = "mono-train";
  m.status = "complete";
  m.add(dir.string(), "x.txt", "demo");
  m.save();

  auto r = RunManifest::try_load(dir.string());
  REQUIRE(r.has_value());
  CHECK(r->config_hash == m.config_hash);
  CHECK(r->artifacts.size() == 1);
  CHECK(r->verify());

  write_atomic((dir / "x.txt").string(), "tampered\n");
  CHECK_FALSE(r->verify());
  fs::remove(dir / "x.txt");
  CHECK_FALSE(r->verify());

  CHECK_FALSE(RunManifest::try_load("no_such_dir_xyz").has_value());
  fs::remove_all(dir);
}

TEST_CASE("stage detection on planted series") {
  // rise to a peak at index 4, fall, then flat
  std::vector<double> vals = {0.1, 0.3, 0.5, 0.8, 1.0, 0.7,  0.4,
                              0.2, 0.1, 0.1, 0.1, 0.1, 0.1};
  std::vector<std::int64_t> steps;
  for (std::size_t k = 0; k < vals.size(); ++k)
    steps.push_back(100 * (std::int64_t)(k + 1));
  StageBoundaries b = detect_stages(steps, vals, 1);  // no smoothing
  CHECK(b.peak_index == 4);
  CHECK(b.peak_step == 500);
  CHECK(b.has_transition);
  CHECK(b.settle_index > b.peak_index);
  CHECK(b.settle_index <= 9);

  // flat after the peak: no transition stage
  std::vector<double> mono = {0.1, 0.5, 0.9, 0.9, 0.9};
  std::vector<std::int64_t> st = {1, 2, 3, 4, 5};
  StageBoundaries b2 = detect_stages(st, mono, 1);
  CHECK(b2.peak_index == 2);
  CHECK_FALSE(b2.has_transition);

  CHECK_THROWS_AS(detect_stages({}, {}, 1), Error);
  CHECK_THROWS_AS(detect_stages({1}, {1.0, 2.0}, 1), Error);
}

TEST_CASE("run(): completes, is idempotent, and is seed-deterministic") {
  fs::remove_all("test_run_a");
  fs::remove_all("test_run_b");

  RunManifest m1 = run(micro_config("test_run_a", 3));
  REQUIRE(m1.status == "complete");
  CHECK(m1.verify());
  CHECK(m1.has_kind("loss-trace"));
  CHECK(m1.has_kind("checkpoint"));
  CHECK(m1.has_kind("vocabulary"));
  CHECK(m1.has_kind("eval-series"));

  // cached: second call must not retrain (wall time is recorded in the
  // manifest; a cache hit returns the stored manifest object unchanged)
  RunManifest m2 = run(micro_config("test_run_a", 3));
  CHECK(m2.wall_seconds == m1.wall_seconds);
  CHECK(m2.to_json() == m1.to_json());

  // same seed elsewhere: bit-identical trace and checkpoints
  RunManifest m3 = run(micro_config("test_run_b", 3));
  REQUIRE(m3.status == "complete");
  CHECK(read_file("test_run_a/trace.jsonl") == read_file("test_run_b/trace.jsonl"));
  auto cks1 = m1.of_kind("checkpoint");
  auto cks3 = m3.of_kind("checkpoint");
  REQUIRE(cks1.size() == cks3.size());
  for (std::size_t k = 0; k < cks1.size(); ++k)
    CHECK(cks1[k].sha256 == cks3[k].sha256);

  // report generation over a finished run
  std::string rep = write_report("test_run_a");
  CHECK(fs::exists(fs::path(rep) / "summary.json"));
  CHECK(fs::exists(fs::path(rep) / "performance_vs_step.csv"));
  CHECK(fs::exists(fs::path(rep) / "worklang_vs_step.csv"));
  CHECK(fs::exists(fs::path(rep) / "lt_neurons_vs_step.csv"));
  CHECK(fs::exists(fs::path(rep) / "transfer_vs_step.csv"));

  fs::remove_all("test_run_a");
  fs::remove_all("test_run_b");
}

TEST_CASE("run(): failures are recorded, not hidden") {
  fs::remove_all("test_run_fail");
  ExperimentConfig c = micro_config("test_run_fail", 4);
  c.kind = ExperimentKind::ContinualPretrain;
  c.start_checkpoint = "no_such_checkpoint.bin";
  c.canonical_text = "micro fail";
  RunManifest m = run(c);
  CHECK(m.status == "failed");
  CHECK(!m.failure.empty());
  // manifest still written
  auto r = RunManifest::try_load("test_run_fail");
  REQUIRE(r.has_value());
  CHECK(r->status == "failed");
  // a failed run is not served from cache
  fs::remove_all("test_run_fail");
}

TEST_CASE("write_atomic leaves no temp files behind") {
  write_atomic("test_atomic_tmp.txt", "data");
  CHECK(read_file("test_atomic_tmp.txt") == "data");
  CHECK_FALSE(fs::exists("test_atomic_tmp.txt.tmp"));
  fs::remove("test_atomic_tmp.txt");
}
