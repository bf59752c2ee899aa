#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ncensus/engine.hpp"
#include "ncensus/field_io.hpp"
#include "ncensus/sampler.hpp"

using namespace ncensus;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

EnsembleConfig small_config(std::uint64_t m = 6) {
  EnsembleConfig c;
  c.model = SpectralModel::plane_wave();
  c.grid = GridSpec::planar(12.0 * pi, 2.0 * pi / 10.0);
  c.realizations = m;
  c.master_seed = 7;
  c.radii = {6.0, 10.0, 15.0};
  c.thresholds = {20.0, 50.0, kUnbounded};
  c.sandwich_pairs = {{3.0, 10.0}};
  c.checks = {Check::FaberKrahn, Check::Sandwich, Check::Helmholtz, Check::Covariance, Check::Perturbation};
  c.threads = 1;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ncensus_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("check names round-trip") {
  for (Check c : {Check::FaberKrahn, Check::Sandwich, Check::Helmholtz, Check::Covariance, Check::Perturbation})
    CHECK(check_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(check_from_string("nonsense"), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(small_config().validate());
  auto c = small_config();
  c.realizations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.thresholds = {50.0, 20.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.radii = {100.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.sandwich_pairs = {{10.0, 15.0}};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.grid = GridSpec::torus(12.0 * pi, 2.0 * pi / 10.0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.model = SpectralModel::band_limited(2, 0.5);
  c.checks = {Check::Sandwich};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.checks = {Check::FaberKrahn, Check::Covariance};
  CHECK_NOTHROW(c.validate());
  c = small_config(1);
  CHECK_THROWS_AS(c.validate(), ConfigError);  // covariance needs two realizations
  c.checks.erase(Check::Covariance);
  CHECK_NOTHROW(c.validate());
  c = small_config();
  c.model = SpectralModel::spherical_harmonic(10);
  c.grid = GridSpec::sphere(32, 64);
  c.radii = {};
  c.checks = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config JSON and hash") {
  const auto c = small_config();
  const auto back = config_from_json(config_json(c));
  CHECK(config_json(back) == config_json(c));
  CHECK(config_hash(back) == config_hash(c));
  auto d = c;
  d.threads = 8;
  d.output_dir = "/elsewhere";
  d.keep_fields = true;
  CHECK(config_hash(d) == config_hash(c));
  d.master_seed = 8;
  CHECK(config_hash(d) != config_hash(c));
  CHECK(config_json(c).dump().find("\"inf\"") != std::string::npos);
}

TEST_CASE("payload is deterministic and independent of scheduling") {
  const auto base = run_ensemble(small_config());
  const std::string payload = base.payload().dump();
  CHECK(run_ensemble(small_config()).payload().dump() == payload);

  auto threaded = small_config();
  threaded.threads = 4;
  const auto t = run_ensemble(threaded);
  CHECK(t.payload().dump() == payload);

  RunHooks reversed;
  reversed.dispatch_order = [](std::uint64_t m) {
    std::vector<std::uint64_t> v(m);
    for (std::uint64_t i = 0; i < m; ++i) v[i] = m - 1 - i;
    return v;
  };
  CHECK(run_ensemble(small_config(), reversed).payload().dump() == payload);
}

TEST_CASE("report contents") {
  const auto rep = run_ensemble(small_config());
  CHECK(rep.completed == 6);
  CHECK(rep.failures.empty());
  CHECK(rep.psi.well_formed());
  REQUIRE(rep.ns.has_value());
  CHECK(rep.ns->per_radius.size() == 3);
  CHECK(rep.sandwich.size() == 6 * 3);
  for (const auto& v : rep.sandwich) CHECK(v.holds);
  for (const char* key : {"faber_krahn", "sandwich", "helmholtz", "covariance", "perturbation"})
    CHECK(rep.checks.contains(key));
  const auto j = rep.to_json();
  CHECK(j.contains("payload"));
  CHECK(j.contains("payload_hash"));
  CHECK(j.at("payload_hash").get<std::string>() == hex64(fnv1a64(j.at("payload").dump())));
  CHECK(j.at("timing").contains("wall_seconds"));
  const auto psi = psi_from_report(j);
  CHECK(psi.breakpoints == rep.psi.breakpoints);
  CHECK(psi.values == rep.psi.values);
}

TEST_CASE("realization i does not depend on the ensemble size") {
  TempDir one("m1"), two("m2");
  auto c1 = small_config(2);
  c1.output_dir = one.path;
  auto c2 = small_config(3);
  c2.output_dir = two.path;
  run_ensemble(c1);
  run_ensemble(c2);
  CHECK(slurp(one.path / "realizations" / "00000.csv") == slurp(two.path / "realizations" / "00000.csv"));
  CHECK(slurp(one.path / "realizations" / "00001.csv") == slurp(two.path / "realizations" / "00001.csv"));
  const auto direct = run_realization(c1, 1);
  const auto table = parse_domain_csv(slurp(one.path / "realizations" / "00001.csv"));
  REQUIRE(table.size() == direct.domains.size());
  for (std::size_t k = 0; k < table.size(); ++k) {
    CHECK(table[k].area == direct.domains[k].area);
    CHECK(table[k].perimeter == direct.domains[k].perimeter);
    CHECK(table[k].touches_window == direct.domains[k].touches_window);
  }
}

TEST_CASE("failures are tolerated up to ten percent") {
  auto c = small_config(10);
  c.checks = {Check::FaberKrahn};
  RunHooks fail_three;
  fail_three.before_realization = [](std::uint64_t i) {
    if (i == 3) throw std::runtime_error("injected");
  };
  const auto rep = run_ensemble(c, fail_three);
  CHECK(rep.completed == 9);
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures[0].index == 3);
  CHECK(rep.failures[0].message == "injected");

  RunHooks fail_two;
  fail_two.before_realization = [](std::uint64_t i) {
    if (i == 3 || i == 4) throw std::runtime_error("injected");
  };
  CHECK_THROWS_AS(run_ensemble(c, fail_two), EnsembleFailure);
}

TEST_CASE("resume") {
  TempDir dir("resume");
  auto c = small_config();
  c.output_dir = dir.path;
  const auto fresh = run_ensemble(c);
  const std::string payload = fresh.payload().dump();
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(fs::exists(dir.path / "report.json"));

  SUBCASE("everything present") {
    const auto again = resume_ensemble(c, dir.path);
    CHECK(again.loaded == 6);
    CHECK(again.computed == 0);
    CHECK(again.payload().dump() == payload);
  }
  SUBCASE("nothing present") {
    fs::remove_all(dir.path / "realizations");
    const auto again = resume_ensemble(c, dir.path);
    CHECK(again.loaded == 0);
    CHECK(again.computed == 6);
    CHECK(again.payload().dump() == payload);
  }
  SUBCASE("interrupted run") {
    fs::remove(dir.path / "realizations" / "00002.json");
    fs::remove(dir.path / "realizations" / "00004.json");
    fs::remove(dir.path / "realizations" / "00004.csv");
    std::vector<std::uint64_t> seen;
    RunHooks record;
    record.before_realization = [&](std::uint64_t i) { seen.push_back(i); };
    const auto again = resume_ensemble(c, dir.path, record);
    CHECK(seen == std::vector<std::uint64_t>{2, 4});
    CHECK(again.payload().dump() == payload);
  }
  SUBCASE("tampered table") {
    const fs::path table = dir.path / "realizations" / "00003.csv";
    std::string text = slurp(table);
    text[text.size() / 2] = text[text.size() / 2] == '1' ? '2' : '1';
    std::ofstream(table, std::ios::binary) << text;
    const auto again = resume_ensemble(c, dir.path);
    CHECK(again.computed == 1);
    CHECK(again.payload().dump() == payload);
  }
  SUBCASE("different config is refused") {
    auto other = c;
    other.master_seed = 99;
    CHECK_THROWS_AS(resume_ensemble(other, dir.path), ConfigError);
  }
  SUBCASE("missing manifest is refused") {
    fs::remove(dir.path / "manifest.json");
    CHECK_THROWS_AS(resume_ensemble(c, dir.path), ConfigError);
  }
}

TEST_CASE("kept fields round-trip") {
  TempDir dir("fields");
  auto c = small_config(2);
  c.checks = {};
  c.output_dir = dir.path;
  c.keep_fields = true;
  run_ensemble(c);
  const auto loaded = read_field(dir.path / "fields" / "00001.ncfs");
  const auto direct = sample_field(c.model, c.grid, c.master_seed, 1);
  CHECK(loaded.grid() == direct.grid());
  CHECK(loaded.model() == direct.model());
  CHECK(loaded.seed() == 7);
  CHECK(loaded.index() == 1);
  CHECK(std::equal(loaded.values().begin(), loaded.values().end(), direct.values().begin(), direct.values().end()));
}

TEST_CASE("field files reject corruption") {
  TempDir dir("corrupt");
  fs::create_directories(dir.path);
  const auto s = sample_field(SpectralModel::plane_wave(), GridSpec::planar(4.0, 0.5), 1, 2);
  const fs::path p = dir.path / "f.ncfs";
  write_field(p, s);
  CHECK(fs::exists(p.string() + ".json"));
  std::string bytes = slurp(p);
  bytes[0] = 'X';
  std::ofstream(p, std::ios::binary) << bytes;
  CHECK_THROWS_AS(read_field(p), FormatError);
  std::ofstream(p, std::ios::binary) << "NCFS";
  CHECK_THROWS_AS(read_field(p), FormatError);
  CHECK_THROWS_AS(read_field(dir.path / "missing.ncfs"), FormatError);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  setenv("NODAL_CENSUS_THREADS", "5", 1);
  CHECK(resolve_threads(0) == 5);
  unsetenv("NODAL_CENSUS_THREADS");
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("sphere and torus ensembles") {
  EnsembleConfig s;
  s.model = SpectralModel::spherical_harmonic(6);
  s.grid = GridSpec::sphere(32, 64);
  s.realizations = 3;
  s.radii = {};
  s.checks = {Check::FaberKrahn, Check::Helmholtz};
  s.threads = 1;
  const auto rep = run_ensemble(s);
  CHECK(rep.completed == 3);
  CHECK(!rep.ns.has_value());
  CHECK(rep.psi.well_formed());

  EnsembleConfig t;
  t.model = SpectralModel::band_limited(2, 0.5);
  t.grid = GridSpec::torus(8.0 * pi, 2.0 * pi / 8.0);
  t.realizations = 3;
  t.radii = {5.0};
  t.checks = {Check::Covariance, Check::Helmholtz};
  t.threads = 1;
  const auto tr = run_ensemble(t);
  CHECK(tr.completed == 3);
  CHECK(tr.checks.contains("covariance"));
}
