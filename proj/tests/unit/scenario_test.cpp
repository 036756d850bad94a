#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "provlog/error.hpp"
#include "provlog/event_io.hpp"
#include "provlog/scenario.hpp"
#include "provlog/security_rules.hpp"

namespace provlog {
namespace {

namespace fs = std::filesystem;

ScenarioSpec small_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  spec.node_count = 500;
  return spec;
}

void expect_infeasible(const ScenarioSpec& spec, const std::string& fragment) {
  try {
    generate(spec);
    ADD_FAILURE() << "expected infeasible: " << fragment;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleSpec);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

/// A fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("provlog_scenario_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// --- templates -------------------------------------------------------------------

TEST(Templates, NamesRoundTrip) {
  for (const auto t : kAllTemplates) EXPECT_EQ(parse_template(template_name(t)), t);
  EXPECT_EQ(template_name(AttackTemplate::MultiStage), "multi_stage");
  EXPECT_FALSE(parse_template("ransomware").has_value());
}

// --- benign generation -----------------------------------------------------------

TEST(Generate, KindCountsFollowTheMix) {
  ScenarioSpec spec;
  spec.seed = 1;
  const auto s = generate(spec);
  EXPECT_EQ(s.facts.node_count(), 1000U);
  EXPECT_EQ(s.facts.nodes_of_kind(NodeKind::Process).size(), 350U);
  EXPECT_EQ(s.facts.nodes_of_kind(NodeKind::File).size(), 400U);
  EXPECT_EQ(s.facts.nodes_of_kind(NodeKind::NetworkConnection).size(), 150U);
  EXPECT_EQ(s.facts.nodes_of_kind(NodeKind::User).size(), 50U);
  EXPECT_EQ(s.facts.nodes_of_kind(NodeKind::MemoryObject).size(), 50U);
  EXPECT_EQ(s.facts.attribute("sensitive_file").size(), 20U);
}

TEST(Generate, EdgeCountFollowsEdgeFactor) {
  auto spec = small_spec(3);
  spec.edge_factor = 4.0;
  EXPECT_EQ(generate(spec).facts.edge_count(), 2000U);
  spec.edge_factor = 1.0;
  EXPECT_EQ(generate(spec).facts.edge_count(), 500U);
}

TEST(Generate, ZeroEdgeFactorLeavesOnlySpawns) {
  auto spec = small_spec(3);
  spec.edge_factor = 0.0;
  const auto s = generate(spec);
  const auto spawn = s.facts.find_edge_type("spawn");
  ASSERT_TRUE(spawn.has_value());
  for (const auto& e : s.facts.edges()) EXPECT_EQ(e.etype, *spawn);
  EXPECT_EQ(s.facts.edge_count(), s.facts.nodes_of_kind(NodeKind::Process).size());
}

TEST(Generate, SensitiveFilesLiveUnderSecurePaths) {
  const auto s = generate(small_spec(4));
  std::set<EntityId> sensitive;
  for (const auto& t : s.facts.attribute("sensitive_file")) sensitive.insert(std::get<EntityId>(t[0]));
  std::set<std::string> paths;
  for (const auto& t : s.facts.attribute("file_path")) {
    const auto path = std::get<std::string>(t[1]);
    EXPECT_EQ(path.starts_with("/etc/secure/"), sensitive.contains(std::get<EntityId>(t[0]))) << path;
    paths.insert(path);
  }
  EXPECT_EQ(paths.size(), s.facts.nodes_of_kind(NodeKind::File).size());
}

TEST(Generate, SameSeedSameBytes) {
  auto spec = small_spec(9);
  spec.attack_injections = {{AttackTemplate::MultiStage, 2}, {AttackTemplate::PolicyViolation, 1}};
  spec.anomalous = {{25, 0}};
  const auto a = generate(spec);
  const auto b = generate(spec);
  EXPECT_EQ(export_events(a.facts), export_events(b.facts));
  EXPECT_EQ(a.truth.to_json(), b.truth.to_json());
  spec.seed = 10;
  EXPECT_NE(export_events(generate(spec).facts), export_events(a.facts));
}

TEST(Generate, EdgesAreEmittedInTimeOrder) {
  auto spec = small_spec(12);
  spec.attack_injections = {{AttackTemplate::DataExfiltration, 3}};
  spec.anomalous = {{30, 12}};
  const auto s = generate(spec);
  Timestamp last = 0;
  for (const auto& e : s.facts.edges()) {
    EXPECT_GE(e.ts, last);
    last = e.ts;
  }
}

// --- separation and soundness ----------------------------------------------------

TEST(Separation, BenignDatasetsTriggerNothing) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto report = detect(generate(small_spec(seed)).facts, builtin_pack());
    EXPECT_TRUE(report.empty()) << "seed " << seed << "\n" << report.summary();
  }
}

TEST(Soundness, EveryTemplateIsDetectedExactly) {
  for (const auto t : kAllTemplates) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto spec = small_spec(seed);
      spec.attack_injections = {{t, 3}};
      const auto s = generate(spec);
      EXPECT_EQ(s.truth.injected.at(std::string(template_name(t))).size(), 3U);
      const auto scores = score(detect(s.facts, builtin_pack()), s.truth);
      for (const auto& [detector, sc] : scores) {
        EXPECT_DOUBLE_EQ(sc.precision, 1.0) << template_name(t) << " seed " << seed << " " << detector;
        EXPECT_DOUBLE_EQ(sc.recall, 1.0) << template_name(t) << " seed " << seed << " " << detector;
      }
    }
  }
}

TEST(Soundness, InjectedChainsAreTemporallyOrdered) {
  auto spec = small_spec(21);
  spec.attack_injections = {{AttackTemplate::MultiStage, 4}};
  const auto s = generate(spec);
  const auto& fb = s.facts;
  const auto ts_of = [&](const std::string& from, const std::string& to, const std::string& op) {
    const auto rows = fb.edges_matching({fb.find(from), fb.find(to), fb.find_edge_type(op)});
    EXPECT_EQ(rows.size(), 1U) << from << " " << op << " " << to;
    return rows.empty() ? Timestamp{0} : rows[0].ts;
  };
  std::multiset<Timestamp> all;
  for (const auto& e : fb.edges()) all.insert(e.ts);
  for (const auto& t : s.truth.injected.at("multi_stage")) {
    const auto escalate = ts_of(t[0], t[1], "create_process");
    const auto read = ts_of(t[1], t[2], "read");
    const auto send = ts_of(t[1], t[3], "send_data");
    EXPECT_LT(escalate, read);
    EXPECT_LT(read, send);
    // Injected events use timestamps no other event has.
    for (const auto ts : {escalate, read, send}) EXPECT_EQ(all.count(ts), 1U);
  }
}

TEST(Soundness, TheBenchmarkSpecScoresPerfectly) {
  for (const std::size_t size : {100U, 1000U}) {
    const auto s = generate(benchmark_spec(size));
    for (const auto& [detector, sc] : score(detect(s.facts, builtin_pack()), s.truth)) {
      EXPECT_DOUBLE_EQ(sc.precision, 1.0) << size << " " << detector;
      EXPECT_DOUBLE_EQ(sc.recall, 1.0) << size << " " << detector;
    }
    EXPECT_FALSE(s.truth.injected.at("multi_stage").empty());
  }
}

// --- infeasible specs ------------------------------------------------------------

TEST(Infeasible, InvalidSpecsAreRejectedWithAReason) {
  auto spec = small_spec(1);
  spec.kind_mix.user = -0.05;
  spec.kind_mix.process = 0.45;
  expect_infeasible(spec, "non-negative");

  spec = small_spec(1);
  spec.kind_mix.file = 0.5;
  expect_infeasible(spec, "sum");

  spec = small_spec(1);
  spec.node_count = 0;
  expect_infeasible(spec, "node count");

  spec = small_spec(1);
  spec.edge_factor = -1;
  expect_infeasible(spec, "edge factor");

  spec = small_spec(1);
  spec.sensitive_file_fraction = 1.5;
  expect_infeasible(spec, "sensitive file fraction");

  spec = small_spec(1);
  spec.file_threshold = -1;
  expect_infeasible(spec, "thresholds");

  spec = small_spec(1);
  spec.node_count = 5;
  spec.attack_injections = {{AttackTemplate::DataExfiltration, 1}};
  expect_infeasible(spec, "10 nodes");

  spec = small_spec(1);
  spec.kind_mix = {.process = 0.0, .file = 0.6, .network_connection = 0.2, .user = 0.1, .memory_object = 0.1};
  spec.anomalous = {{25, 0}};
  expect_infeasible(spec, "process proportion");
}

TEST(Infeasible, TinyBenignDatasetsAreFine) {
  auto spec = small_spec(1);
  spec.node_count = 1;
  EXPECT_EQ(generate(spec).facts.node_count(), 1U);
}

// --- anomalous injection ---------------------------------------------------------

struct Counts {
  std::size_t reads = 0;
  std::size_t connects = 0;
  bool reads_sensitive = false;
};

Counts counts_of(const FactBase& fb, const std::string& process) {
  const auto p = *fb.find(process);
  std::set<EntityId> files, conns;
  Counts c;
  for (const auto& e : fb.edges()) {
    if (e.from != p) continue;
    if (fb.edge_type_name(e.etype) == "read") {
      files.insert(e.to);
      c.reads_sensitive = c.reads_sensitive || fb.attribute("sensitive_file").contains(AttrTuple{e.to});
    }
    if (fb.edge_type_name(e.etype) == "connect") conns.insert(e.to);
  }
  c.reads = files.size();
  c.connects = conns.size();
  return c;
}

TEST(AnomalousInjection, ManyReadsIsAnomalous) {
  auto fb = generate(small_spec(2)).facts;
  const auto entry = inject_anomalous_process(fb, 25, 0, 7);
  const auto c = counts_of(fb, entry.process);
  EXPECT_EQ(c.reads, 25U);
  EXPECT_EQ(c.connects, 0U);
  EXPECT_FALSE(c.reads_sensitive);
  const auto found = detect(fb, builtin_pack()).labels("anomalous_process");
  EXPECT_EQ(found, (std::vector<LabelTuple>{{entry.process}}));
}

TEST(AnomalousInjection, FewAccessesAreNotAnomalous) {
  auto fb = generate(small_spec(2)).facts;
  const auto entry = inject_anomalous_process(fb, 5, 3, 7);
  EXPECT_EQ(counts_of(fb, entry.process).reads, 5U);
  EXPECT_EQ(counts_of(fb, entry.process).connects, 3U);
  EXPECT_TRUE(detect(fb, builtin_pack()).empty());
}

TEST(AnomalousInjection, ManyConnectionsIsAnomalous) {
  auto fb = generate(small_spec(2)).facts;
  const auto entry = inject_anomalous_process(fb, 0, 15, 7);
  EXPECT_EQ(counts_of(fb, entry.process).connects, 15U);
  EXPECT_EQ(detect(fb, builtin_pack()).labels("anomalous_process"), (std::vector<LabelTuple>{{entry.process}}));
}

TEST(AnomalousInjection, TwentyReadsAtTheThresholdIsNot) {
  auto fb = generate(small_spec(2)).facts;
  inject_anomalous_process(fb, 20, 10, 7);
  EXPECT_TRUE(detect(fb, builtin_pack()).labels("anomalous_process").empty());
}

TEST(AnomalousInjection, CreatesTargetsInAnEmptyStore) {
  FactBase fb;
  const auto entry = inject_anomalous_process(fb, 30, 12, 1);
  EXPECT_EQ(fb.nodes_of_kind(NodeKind::File).size(), 30U);
  EXPECT_EQ(fb.nodes_of_kind(NodeKind::NetworkConnection).size(), 12U);
  EXPECT_EQ(counts_of(fb, entry.process).reads, 30U);
}

TEST(AnomalousInjection, TimestampsFillGapsWithoutCollisions) {
  auto fb = generate(small_spec(6)).facts;
  std::set<Timestamp> before;
  for (const auto& e : fb.edges()) before.insert(e.ts);
  const auto old_edges = fb.edge_count();
  inject_anomalous_process(fb, 25, 11, 3);
  std::set<Timestamp> fresh;
  for (std::size_t i = old_edges; i < fb.edge_count(); ++i) {
    const auto ts = fb.edges()[i].ts;
    EXPECT_FALSE(before.contains(ts));
    EXPECT_TRUE(fresh.insert(ts).second);
  }
}

TEST(AnomalousInjection, TruthLabelsFollowTheThresholds) {
  auto spec = small_spec(5);
  spec.anomalous = {{25, 0}, {5, 3}, {0, 15}, {20, 10}};
  const auto s = generate(spec);
  ASSERT_EQ(s.truth.anomalous.size(), 4U);
  const auto& expected = s.truth.expected.at("anomalous_process");
  EXPECT_EQ(expected, (std::set<LabelTuple>{{s.truth.anomalous[0].process}, {s.truth.anomalous[2].process}}));
  const auto sc = score(detect(s.facts, builtin_pack()), s.truth).at("anomalous_process");
  EXPECT_DOUBLE_EQ(sc.precision, 1.0);
  EXPECT_DOUBLE_EQ(sc.recall, 1.0);
}

// --- serialization ---------------------------------------------------------------

TEST(Serialization, FnvDigestKnownValues) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a64_hex("foobar"), "85944171f73967e8");
}

TEST(Serialization, TruthJsonRoundTrips) {
  auto spec = small_spec(8);
  spec.attack_injections = {{AttackTemplate::MultiStage, 1}, {AttackTemplate::PrivilegeEscalation, 2}};
  spec.anomalous = {{25, 0}, {1, 1}};
  const auto truth = generate(spec).truth;
  EXPECT_EQ(GroundTruth::from_json(truth.to_json()), truth);
  EXPECT_THROW(GroundTruth::from_json("{\"injected\": 3}"), Error);
  EXPECT_THROW(GroundTruth::from_json("not json"), Error);
}

TEST(Serialization, SpecJsonRoundTrips) {
  auto spec = small_spec(8);
  spec.edge_factor = 2.5;
  spec.kind_mix = {.process = 0.4, .file = 0.4, .network_connection = 0.1, .user = 0.05, .memory_object = 0.05};
  spec.attack_injections = {{AttackTemplate::PolicyViolation, 4}};
  spec.anomalous = {{3, 30}};
  spec.file_threshold = 7;
  const auto again = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(spec_to_json(again), spec_to_json(spec));
  EXPECT_EQ(export_events(generate(again).facts), export_events(generate(spec).facts));
  EXPECT_THROW(spec_from_json("{\"attack_injections\":[{\"template\":\"nope\",\"count\":1}]}"), Error);
}

TEST(Dataset, WriteDatasetAndVerify) {
  const auto dir = scratch("dataset");
  auto spec = small_spec(13);
  spec.attack_injections = {{AttackTemplate::DataExfiltration, 1}};
  const auto s = generate(spec);
  write_dataset(dir, spec, s);
  EXPECT_EQ(slurp(dir / "events.jsonl"), export_events(s.facts));
  EXPECT_EQ(GroundTruth::from_json(slurp(dir / "truth.json")), s.truth);
  EXPECT_TRUE(verify_manifest(dir / "manifest.json").empty());
  EXPECT_EQ(export_events(load_events_file(dir / "events.jsonl")), export_events(s.facts));
  fs::remove_all(dir);
}

TEST(Dataset, BenchmarkSuiteIsReproducible) {
  const auto a = scratch("suite_a");
  const auto b = scratch("suite_b");
  const auto entries = emit_benchmark_suite({100, 300}, a);
  ASSERT_EQ(entries.size(), 2U);
  EXPECT_EQ(entries[0].dir, a / "size_100");
  EXPECT_TRUE(fs::exists(a / "size_300" / "events.jsonl"));
  EXPECT_TRUE(verify_manifest(a / "manifest.json").empty());
  emit_benchmark_suite({100, 300}, b);
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
  EXPECT_EQ(slurp(a / "size_300" / "events.jsonl"), slurp(b / "size_300" / "events.jsonl"));

  // Any change to a dataset file is caught by the manifest.
  std::ofstream(a / "size_100" / "events.jsonl", std::ios::app) << "\n";
  const auto bad = verify_manifest(a / "manifest.json");
  ASSERT_EQ(bad.size(), 1U);
  EXPECT_NE(bad[0].find("size_100"), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Dataset, SuiteRejectsTinySizes) {
  const auto dir = scratch("suite_tiny");
  try {
    emit_benchmark_suite({50}, dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleSpec);
  }
  fs::remove_all(dir);
}

TEST(Dataset, MissingManifestIsIoError) {
  try {
    verify_manifest("/nonexistent/manifest.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

}  // namespace
}  // namespace provlog
