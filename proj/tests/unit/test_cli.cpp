#include <doctest.h>

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"
#include "slicereduce/digest.hpp"
#include "slicereduce/embeddings.hpp"
#include "slicereduce/manifest.hpp"
#include "slicereduce/png_io.hpp"
#include "slicereduce/provenance.hpp"
#include "test_util.hpp"

using namespace slicereduce;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Small corpus shared by most cases.
struct Corpus {
  testutil::TempDir dir{"cli"};
  fs::path manifest;

  Corpus() {
    const auto r = run_cli({"synth", "--out", (dir / "data").string(), "--volumes", "3", "--slices", "12", "--seed", "7",
                        "--width", "48", "--height", "40"});
    REQUIRE(r.code == 0);
    manifest = dir / "data" / "manifest.jsonl";
  }
  std::string out(const std::string &name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"reduce", "--help"}).code == 0);
  CHECK(run_cli({"reduce", "--manifest", "m.jsonl"}).code == 1);
  CHECK(run_cli({"reduce", "--manifest", "m.jsonl", "--method", "bogus", "--mode", "fraction", "--value", "0.1", "--out",
             "x"})
            .code == 1);
}

TEST_CASE("reduce writes a reduced manifest and a provenance sidecar") {
  Corpus c;
  const auto r = run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "hash", "--mode", "threshold", "--value",
                      "6", "--out", c.out("hash6"), "--threads", "2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("kept") != std::string::npos);
  const auto reduced = load_manifest(c.dir / "hash6" / "reduced.jsonl");
  const auto prov = read_provenance(c.dir / "hash6" / "provenance.json");
  std::size_t kept = 0;
  for (const auto &v : prov.plan.volumes) kept += v.kept.size();
  CHECK(reduced.size() == kept);
  for (const auto &ref : reduced) CHECK(fs::exists(resolve_slice_path(c.dir / "hash6" / "reduced.jsonl", ref)));
  CHECK(prov.input_manifest_digest == "sha256:" + sha256_hex(std::string_view(testutil::read_file(c.manifest))));
  CHECK(prov.plan_digest == plan_digest(prov.plan));
  CHECK(mode_value(prov.plan.mode) == 6.0);
}

TEST_CASE("every-n baseline") {
  Corpus c;
  CHECK(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "every-n", "--mode", "fraction", "--value", "0.1",
             "--out", c.out("e10")})
            .code == 0);
  const auto prov = read_provenance(c.dir / "e10" / "provenance.json");
  CHECK(std::get<method::EveryN>(prov.plan.method).n == 10);
  for (const auto &v : prov.plan.volumes) CHECK(v.kept == std::vector<int>{0, 10});
  CHECK(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "every-n", "--mode", "count", "--value", "2",
             "--out", c.out("bad")})
            .code == 1);
}

TEST_CASE("config validation exits 1 and names the problem") {
  Corpus c;
  const auto m = c.manifest.string();
  const auto deep = run_cli({"reduce", "--manifest", m, "--method", "deepnet", "--mode", "fraction", "--value", "0.5",
                         "--out", c.out("d")});
  CHECK(deep.code == 1);
  CHECK(deep.err.find("--embeddings") != std::string::npos);
  CHECK(run_cli({"reduce", "--manifest", m, "--method", "hash", "--mode", "fraction", "--value", "1.5", "--out", c.out("x")})
            .code == 1);
  CHECK(run_cli({"reduce", "--manifest", m, "--method", "hash", "--mode", "count", "--value", "2.5", "--out", c.out("x")})
            .code == 1);
  CHECK(run_cli({"reduce", "--manifest", m, "--method", "hash", "--mode", "median", "--value", "2", "--out", c.out("x")})
            .code == 1);
  CHECK(run_cli({"reduce", "--manifest", m, "--method", "ssim", "--mode", "threshold", "--value", "0.9", "--out",
             c.out("x"), "--window-center", "35"})
            .code == 1);
  CHECK(run_cli({"reduce", "--manifest", m, "--method", "mi", "--bins", "1", "--mode", "threshold", "--value", "1.5",
             "--out", c.out("x")})
            .code == 1);
  CHECK_FALSE(fs::exists(c.dir / "x"));
}

TEST_CASE("data errors exit 2") {
  Corpus c;
  const auto missing = run_cli({"reduce", "--manifest", c.out("none.jsonl"), "--method", "hash", "--mode", "threshold",
                            "--value", "6", "--out", c.out("o")});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("IoError") != std::string::npos);
  testutil::write_file(c.dir / "dup.jsonl",
                       "{\"volume_id\":\"a\",\"slice_index\":0,\"path\":\"x.png\"}\n"
                       "{\"volume_id\":\"a\",\"slice_index\":0,\"path\":\"y.png\"}\n");
  CHECK(run_cli({"reduce", "--manifest", c.out("dup.jsonl"), "--method", "hash", "--mode", "threshold", "--value", "6",
             "--out", c.out("o")})
            .code == 2);
  CHECK(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "deepnet", "--embeddings", c.out("none.sseb"),
             "--mode", "threshold", "--value", "0.9", "--out", c.out("o")})
            .code == 2);
}

TEST_CASE("deepnet from an embedding file") {
  Corpus c;
  const auto refs = load_manifest(c.manifest);
  EmbeddingTable t(4);
  for (const auto &r : refs) {
    // Slices 0-5 of each volume share a direction; the rest are distinct.
    const float i = static_cast<float>(r.slice_index);
    t.add(slice_key(r), r.slice_index < 6 ? std::vector<float>{1, 2, 3, 4} : std::vector<float>{i, -i, 1, i * i});
  }
  write_embeddings(c.dir / "e.sseb", t);
  const auto r = run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "deepnet", "--embeddings",
                      c.out("e.sseb"), "--mode", "threshold", "--value", "0.999", "--out", c.out("deep")});
  REQUIRE(r.code == 0);
  const auto prov = read_provenance(c.dir / "deep" / "provenance.json");
  for (const auto &v : prov.plan.volumes) {
    for (int i = 1; i < 6; ++i) CHECK(std::find(v.removed.begin(), v.removed.end(), i) != v.removed.end());
  }
}

TEST_CASE("thread count does not change outputs") {
  Corpus c;
  for (const std::string method : {"hash", "ssim", "mi"}) {
    const std::string value = method == "hash" ? "6" : (method == "mi" ? "1.3" : "0.5");
    std::vector<std::string> digests;
    std::vector<std::string> manifests;
    for (const std::string threads : {"1", "8"}) {
      const auto dir = c.out(method + "_t" + threads);
      REQUIRE(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", method, "--mode", "threshold", "--value",
                   value, "--out", dir, "--threads", threads})
                  .code == 0);
      digests.push_back(read_provenance(fs::path(dir) / "provenance.json").plan_digest);
      manifests.push_back(testutil::read_file(fs::path(dir) / "reduced.jsonl"));
    }
    CHECK(digests[0] == digests[1]);
    CHECK(manifests[0] == manifests[1]);
  }
}

TEST_CASE("--config accepts the flag names as JSON keys") {
  Corpus c;
  json cfg = {{"manifest", c.manifest.string()}, {"method", "hash"},   {"mode", "threshold"},
              {"value", 6},                     {"out", c.out("cfg")}, {"threads", 1}};
  testutil::write_file(c.dir / "run.json", cfg.dump());
  REQUIRE(run_cli({"reduce", "--config", c.out("run.json")}).code == 0);
  REQUIRE(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "hash", "--mode", "threshold", "--value", "6",
               "--out", c.out("flags")})
              .code == 0);
  CHECK(testutil::read_file(c.dir / "cfg" / "reduced.jsonl") == testutil::read_file(c.dir / "flags" / "reduced.jsonl"));

  // Flags given on the command line override the file.
  REQUIRE(run_cli({"reduce", "--config", c.out("run.json"), "--value", "0", "--out", c.out("override")}).code == 0);
  const auto prov = read_provenance(c.dir / "override" / "provenance.json");
  CHECK(mode_value(prov.plan.mode) == 0.0);

  testutil::write_file(c.dir / "broken.json", "{not json");
  CHECK(run_cli({"reduce", "--config", c.out("broken.json")}).code == 1);
  testutil::write_file(c.dir / "unknown.json", "{\"colour\": \"red\"}");
  CHECK(run_cli({"reduce", "--config", c.out("unknown.json")}).code == 1);

  json bench_cfg = {{"manifest", c.manifest.string()}, {"methods", {"hash", "every-n"}}, {"repetitions", 1}};
  testutil::write_file(c.dir / "bench.json", bench_cfg.dump());
  const auto b = run_cli({"bench", "--config", c.out("bench.json")});
  CHECK(b.code == 0);
  CHECK(b.out.find("every-n,") != std::string::npos);
}

TEST_CASE("compare") {
  Corpus c;
  const auto m = c.manifest.string();
  REQUIRE(run_cli({"reduce", "--manifest", m, "--method", "hash", "--mode", "threshold", "--value", "6", "--out",
               c.out("a")})
              .code == 0);
  REQUIRE(run_cli({"reduce", "--manifest", m, "--method", "hash", "--mode", "threshold", "--value", "6", "--out",
               c.out("b")})
              .code == 0);
  REQUIRE(run_cli({"reduce", "--manifest", m, "--method", "every-n", "--mode", "fraction", "--value", "0.25", "--out",
               c.out("e")})
              .code == 0);

  CHECK(run_cli({"compare", c.out("a")}).code == 1);
  CHECK(run_cli({"compare"}).code == 1);

  const auto same = run_cli({"compare", c.out("a"), c.out("b")});
  REQUIRE(same.code == 0);
  const auto j = json::parse(same.out);
  REQUIRE(j.size() == 1);
  CHECK(j[0]["jaccard"].get<double>() == 1.0);
  for (const auto &v : j[0]["volumes"]) CHECK(v["jaccard"].get<double>() == 1.0);

  const auto three = run_cli({"compare", c.out("a"), (c.dir / "e" / "provenance.json").string(), c.out("b"), "--out",
                          c.out("overlap.json")});
  REQUIRE(three.code == 0);
  CHECK(json::parse(three.out).size() == 3);
  CHECK(json::parse(testutil::read_file(c.dir / "overlap.json")) == json::parse(three.out));

  // A plan over a different manifest.
  REQUIRE(run_cli({"synth", "--out", c.out("other"), "--volumes", "2", "--slices", "12", "--seed", "8"}).code == 0);
  REQUIRE(run_cli({"reduce", "--manifest", c.out("other/manifest.jsonl"), "--method", "hash", "--mode", "threshold",
               "--value", "6", "--out", c.out("z")})
              .code == 0);
  const auto mismatch = run_cli({"compare", c.out("a"), c.out("z")});
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("ManifestMismatch") != std::string::npos);
  CHECK(run_cli({"compare", c.out("a"), c.out("nothing")}).code == 2);
}

TEST_CASE("stats") {
  Corpus c;
  REQUIRE(run_cli({"reduce", "--manifest", c.manifest.string(), "--method", "ssim", "--mode", "fraction", "--value", "0.5",
               "--out", c.out("s")})
              .code == 0);
  const auto r = run_cli({"stats", c.out("s")});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["kept_fraction"].get<double>() == 0.5);
  CHECK(j["slices"] == 36);
  CHECK_FALSE(j.contains("kept_pair_scores"));
  const auto scored = run_cli({"stats", c.out("s"), "--scores", "--bins", "8"});
  REQUIRE(scored.code == 0);
  CHECK(json::parse(scored.out)["kept_pair_scores"]["counts"].size() == 8);
}

TEST_CASE("hash-dump") {
  testutil::TempDir dir("dump");
  write_gray_png(dir / "flat.png", 30, 20, std::vector<std::uint8_t>(600, 90));
  std::vector<std::uint8_t> ramp(72);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 9; ++x) ramp[y * 9 + x] = static_cast<std::uint8_t>(20 * x);
  }
  write_gray_png(dir / "ramp.png", 9, 8, ramp);
  const auto one = run_cli({"hash-dump", (dir / "flat.png").string()});
  CHECK(one.code == 0);
  CHECK(one.out == "0000000000000000\n");
  const auto two = run_cli({"hash-dump", (dir / "flat.png").string(), (dir / "ramp.png").string()});
  CHECK(two.out == (dir / "flat.png").string() + "\t0000000000000000\n" + (dir / "ramp.png").string() +
                       "\tffffffffffffffff\n");
  CHECK(run_cli({"hash-dump"}).code == 1);
  CHECK(run_cli({"hash-dump", (dir / "absent.png").string()}).code == 2);

  Corpus c;
  const auto listing = run_cli({"hash-dump", "--manifest", c.manifest.string()});
  CHECK(listing.code == 0);
  CHECK(std::count(listing.out.begin(), listing.out.end(), '\n') == 36);
  CHECK(listing.out.rfind("vol000/0\t", 0) == 0);
}

TEST_CASE("synth is seeded and deterministic") {
  testutil::TempDir dir("synth");
  REQUIRE(run_cli({"synth", "--out", (dir / "a").string(), "--volumes", "2", "--slices", "8", "--seed", "7"}).code == 0);
  REQUIRE(run_cli({"synth", "--out", (dir / "b").string(), "--volumes", "2", "--slices", "8", "--seed", "7"}).code == 0);
  std::size_t files = 0;
  for (const auto &e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), dir / "a");
    CHECK(testutil::read_file(e.path()) == testutil::read_file(dir / "b" / rel));
  }
  CHECK(files == 17);
  CHECK(run_cli({"synth", "--out", (dir / "c").string(), "--bit-depth", "12"}).code == 1);
  CHECK(run_cli({"synth", "--out", (dir / "c").string(), "--slices", "0"}).code == 1);
}

TEST_CASE("bench emits one CSV for several methods") {
  Corpus c;
  const auto r = run_cli({"bench", "--manifest", c.manifest.string(), "--methods", "hash,every-n", "--repetitions", "3",
                      "--csv", c.out("bench.csv"), "--out", c.out("bench")});
  REQUIRE(r.code == 0);
  CHECK(r.out == testutil::read_file(c.dir / "bench.csv"));
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,phase,wall_seconds,slices_per_second,repetition,pairs,seconds_per_pair");
  int hash = 0, every = 0;
  while (std::getline(in, line)) {
    if (line.rfind("hash,", 0) == 0) ++hash;
    if (line.rfind("every-n,", 0) == 0) ++every;
  }
  CHECK(hash == 25);
  CHECK(every == 25);
  const auto prov = read_provenance(c.dir / "bench" / "hash" / "provenance.json");
  CHECK(prov.bench_csv == r.out);
  CHECK(fs::exists(c.dir / "bench" / "every-n" / "reduced.jsonl"));
  CHECK(run_cli({"bench", "--manifest", c.manifest.string(), "--methods", "hash", "--repetitions", "0"}).code == 1);
  CHECK(run_cli({"bench", "--manifest", c.manifest.string(), "--methods", "deepnet"}).code == 1);
}
