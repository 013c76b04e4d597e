#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "otdp/bench.hpp"
#include "otdp/catalog.hpp"
#include "otdp/error.hpp"
#include "otdp/report.hpp"
#include "otdp/scenario.hpp"

using namespace otdp;
using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path bundled(const std::string& name) { return default_scenario_dir() / (name + ".json"); }

json bundled_json(const std::string& name) { return json::parse(read_file(bundled(name))); }

std::string pointer_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ValidationError& e) {
    return e.pointer();
  }
  return "";
}

double number(const json& j) { return ext_from_json(j).value(); }

double cost(const json& j) { return j.is_string() ? INFINITY : j.get<double>(); }

}  // namespace

TEST_CASE("bundled files are the canonical text of the catalog builders") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const std::string bytes = read_file(bundled(name));
    REQUIRE_FALSE(bytes.empty());
    CHECK(bytes == canonical_text(catalog_scenario(name)));
    CHECK(canonical_text(load_scenario(bundled(name))) == bytes);
  }
}

TEST_CASE("save then load reproduces the same bytes") {
  const auto dir = std::filesystem::temp_directory_path() / "otdp_roundtrip";
  std::filesystem::create_directories(dir);
  for (const auto& name : catalog_names()) {
    const auto first = load_scenario(bundled(name));
    save_scenario(first, dir / "a.json");
    save_scenario(load_scenario(dir / "a.json"), dir / "b.json");
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
    CHECK(read_file(dir / "a.json") == read_file(bundled(name)));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("names resolve inside the scenario directory") {
  CHECK(resolve_scenario("split_mass", default_scenario_dir()) == bundled("split_mass"));
  CHECK(resolve_scenario("split_mass.json", default_scenario_dir()) == bundled("split_mass"));
  CHECK_THROWS_AS(load_scenario(default_scenario_dir() / "missing.json"), Error);
  CHECK_THROWS_AS(catalog_scenario("missing"), DomainError);
}

TEST_CASE("validation errors carry a JSON pointer") {
  SUBCASE("weights summing to 0.9") {
    auto j = bundled_json("split_mass");
    j["initial"]["atoms"] = json::array({{{"point", "0"}, {"weight", 0.9}}});
    CHECK(pointer_of(j).rfind("/initial", 0) == 0);
  }
  SUBCASE("unknown key") {
    auto j = bundled_json("split_mass");
    j["options"]["tolerance"] = 1e-9;
    CHECK(pointer_of(j) == "/options/tolerance");
  }
  SUBCASE("missing key") {
    auto j = bundled_json("split_mass");
    j["system"].erase("horizon");
    CHECK(pointer_of(j) == "/system/horizon");
  }
  SUBCASE("negative cost") {
    auto j = bundled_json("counterexample_multimarginal");
    j["system"]["terminal_cost"][1][0] = -1.0;
    CHECK(pointer_of(j) == "/system/terminal_cost/1/0");
  }
  SUBCASE("strings other than +inf") {
    auto j = bundled_json("counterexample_multimarginal");
    j["system"]["terminal_cost"][0][2] = "inf";
    CHECK(pointer_of(j) == "/system/terminal_cost/0/2");
  }
  SUBCASE("unknown next-state label") {
    auto j = bundled_json("counterexample_multimarginal");
    j["system"]["dynamics"][0][0] = "7";
    CHECK(pointer_of(j) == "/system/dynamics/0/0");
  }
  SUBCASE("reference count inconsistent with the horizon") {
    auto j = bundled_json("counterexample_multimarginal");
    j["references"].erase(0);
    CHECK(pointer_of(j).rfind("/references", 0) == 0);
  }
  SUBCASE("particle clouds of different sizes") {
    auto j = bundled_json("lqr_pair");
    j["target"]["points"].erase(0);
    CHECK_FALSE(pointer_of(j).empty());
  }
  SUBCASE("not JSON") {
    const auto p = std::filesystem::temp_directory_path() / "otdp_bad.json";
    std::ofstream(p) << "{";
    CHECK_THROWS_AS(load_scenario(p), ValidationError);
    std::filesystem::remove(p);
  }
}

TEST_CASE("+inf decodes to infinity and encodes back") {
  auto j = bundled_json("counterexample_multimarginal");
  j["system"]["terminal_cost"][0][2] = "+inf";
  const auto s = parse_scenario(j);
  CHECK(scenario_to_json(s)["system"]["terminal_cost"][0][2] == "+inf");
  const auto report = run(s).report;
  CHECK(report["status"] == "ok");
}

TEST_CASE("hash identifies the canonical scenario") {
  const auto a = load_scenario(bundled("split_mass"));
  const std::string h = scenario_hash(a);
  CHECK(h.size() == 64);
  CHECK(std::all_of(h.begin(), h.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }));
  CHECK(scenario_hash(parse_scenario(scenario_to_json(a))) == h);
  auto j = scenario_to_json(a);
  j["description"] = "changed";
  CHECK(scenario_hash(parse_scenario(j)) != h);
  CHECK(run(a).report["scenario"]["hash"] == h);
}

TEST_CASE("two marginals are not enough") {
  RunFlags flags;
  flags.mode = LiftMode::both;
  const auto result = run(load_scenario(bundled("counterexample_multimarginal")), flags);
  CHECK(result.exit_code() == 0);
  CHECK(std::abs(number(result.report["values"]["multi"])) <= 1e-9);
  CHECK(number(result.report["values"]["two"]) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(number(result.report["oracle"]["value"])) <= 1e-9);
}

TEST_CASE("naive noisy lift against the fleet optimum") {
  const auto report = run(load_scenario(bundled("noise_counterexample"))).report;
  CHECK(number(report["values"]["naive"]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(number(report["values"]["exact"])) <= 1e-9);
}

TEST_CASE("zero-cost scenario reports zero everywhere") {
  RunFlags flags;
  flags.mode = LiftMode::both;
  const auto report = run(load_scenario(bundled("zero_cost")), flags).report;
  CHECK(number(report["values"]["multi"]) == 0.0);
  CHECK(number(report["values"]["two"]) == 0.0);
  for (const auto& stage : report["rollout"]["stages"]) CHECK(number(stage["stage_cost"]) == 0.0);
  CHECK(number(report["rollout"]["terminal_cost"]) == 0.0);
  CHECK(number(report["rollout"]["total_cost"]) == 0.0);
}

TEST_CASE("mass splitting") {
  const auto report = run(load_scenario(bundled("split_mass"))).report;
  CHECK(report["plan"]["is_map"] == false);
  double moved = 0.0;
  for (const auto& e : report["rollout"]["stages"][0]["inputs"]) {
    CHECK(e["state"] == "0");
    CHECK(e["mass"].get<double>() == doctest::Approx(0.5));
    moved += e["mass"].get<double>();
  }
  CHECK(report["rollout"]["stages"][0]["inputs"].size() == 2);
  CHECK(moved == doctest::Approx(1.0));
}

TEST_CASE("both modes report the two-marginal value above the multi-marginal one") {
  RunFlags flags;
  flags.mode = LiftMode::both;
  for (const char* name : {"robots_in_grid", "split_mass", "counterexample_multimarginal", "zero_cost"}) {
    CAPTURE(name);
    const auto report = run(load_scenario(bundled(name)), flags).report;
    CHECK(number(report["values"]["two"]) >= number(report["values"]["multi"]) - 1e-9);
  }
}

TEST_CASE("reports are deterministic") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto s = load_scenario(bundled(name));
    CHECK(report_text(run(s).report) == report_text(run(s).report));
  }
  RunFlags timed;
  timed.timings = true;
  CHECK(run(load_scenario(bundled("split_mass")), timed).report.contains("timings_ms"));
  CHECK_FALSE(run(load_scenario(bundled("split_mass"))).report.contains("timings_ms"));
}

TEST_CASE("sampled clouds follow the seed") {
  const auto s = load_scenario(bundled("integrator_fleet"));
  RunFlags other;
  other.seed = 8;
  const auto a = run(s).report, b = run(s, other).report;
  CHECK(a["particles"] != b["particles"]);
  CHECK(a["options"]["seed"] == 7);
  CHECK(b["options"]["seed"] == 8);
}

TEST_CASE("integrator value is the squared Wasserstein distance over the horizon") {
  const auto report = run(load_scenario(bundled("integrator_fleet"))).report;
  const auto& x = report["particles"]["initial"];
  const auto& y = report["particles"]["target"];
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t d = 0; d < x[i].size(); ++d) {
        const double diff = x[i][d].get<double>() - y[perm[i]][d].get<double>();
        c += diff * diff;
      }
    }
    best = std::min(best, c / static_cast<double>(x.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(report["w2_squared"].get<double>() == doctest::Approx(best).epsilon(1e-12));
  CHECK(number(report["values"]["multi"]) == doctest::Approx(best / 4.0).epsilon(1e-12));
  CHECK(report["rollout"]["landing_error"].get<double>() <= 1e-9);
}

TEST_CASE("forest ride against per-drone path enumeration") {
  const auto j = bundled_json("forest_ride");
  const auto& sys = j["system"];
  const auto states = sys["states"].get<std::vector<std::string>>();
  const auto refs = sys["references"].get<std::vector<std::string>>();
  const std::size_t n_inputs = sys["inputs"].size(), horizon = sys["horizon"];
  auto index = [](const std::vector<std::string>& labels, const std::string& l) {
    return static_cast<std::size_t>(std::find(labels.begin(), labels.end(), l) - labels.begin());
  };
  std::vector<std::size_t> starts, flags;
  for (const auto& a : j["initial"]["atoms"]) starts.push_back(index(states, a["point"]));
  for (const auto& a : j["references"][0]["atoms"]) flags.push_back(index(refs, a["point"]));
  REQUIRE(starts.size() == 4);

  // Cheapest of all input sequences from each start to each flag.
  std::vector<std::vector<double>> best(4, std::vector<double>(4, INFINITY));
  std::size_t sequences = 1;
  for (std::size_t k = 0; k < horizon; ++k) sequences *= n_inputs;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t code = 0; code < sequences; ++code) {
      std::size_t x = starts[s], c = code;
      double total = 0.0;
      for (std::size_t k = 0; k < horizon && std::isfinite(total); ++k) {
        const std::size_t u = c % n_inputs;
        c /= n_inputs;
        total += cost(sys["stage_cost"][x][u]);
        x = index(states, sys["dynamics"][x][u]);
      }
      for (std::size_t f = 0; f < 4; ++f) best[s][f] = std::min(best[s][f], total + cost(sys["terminal_cost"][x][flags[f]]));
    }
  }
  std::vector<std::size_t> perm{0, 1, 2, 3};
  double optimum = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t s = 0; s < 4; ++s) c += best[s][perm[s]] / 4.0;
    optimum = std::min(optimum, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  REQUIRE(std::isfinite(optimum));

  const auto report = run(load_scenario(bundled("forest_ride"))).report;
  CHECK(number(report["values"]["two"]) == doctest::Approx(optimum).epsilon(1e-12));
  CHECK(number(report["rollout"]["total_cost"]) == doctest::Approx(optimum).epsilon(1e-12));
  CHECK(report["rollout"]["final_measure"].size() == 4);
}

TEST_CASE("infeasible scenarios report status 2") {
  auto j = bundled_json("split_mass");
  for (auto& row : j["system"]["terminal_cost"]) {
    for (auto& c : row) c = "+inf";
  }
  const auto result = run(parse_scenario(j));
  CHECK(result.exit_code() == 2);
  CHECK(result.report["status"] == "infeasible");
}

TEST_CASE("memory cap is enforced with a ground-dp error") {
  RunFlags flags;
  flags.mode = LiftMode::multi;
  CHECK_THROWS_AS(run(load_scenario(bundled("forest_ride")), flags), CapacityError);
}

TEST_CASE("bench grid") {
  const auto rows = bench_counts(parse_bench_grid("M=1,10,1000;X=10,10000000"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].configurations == 10);
  CHECK(rows[2].configurations == 92378);
  CHECK(rows[5].overflow);
  CHECK_FALSE(rows[0].overflow);
  const std::string csv = bench_csv(rows);
  CHECK(csv.substr(0, csv.find('\n')) == kBenchHeader);
  CHECK(csv.find("\n1,10,10,10,0\n") != std::string::npos);
  CHECK(csv.find("\n10,10,92378,10,0\n") != std::string::npos);
  CHECK_THROWS_AS(parse_bench_grid("M=0"), DomainError);
  CHECK_THROWS_AS(parse_bench_grid("M=a"), DomainError);
  CHECK_THROWS_AS(parse_bench_grid("Q=1"), DomainError);
}
