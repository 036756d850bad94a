#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "provlog/graph_store.hpp"

namespace provlog {

enum class AttackTemplate : std::uint8_t {
  DataExfiltration,
  PrivilegeEscalation,
  MultiStage,
  UnauthorizedSensitiveAccess,
  PolicyViolation,
};

inline constexpr AttackTemplate kAllTemplates[] = {
    AttackTemplate::DataExfiltration, AttackTemplate::PrivilegeEscalation, AttackTemplate::MultiStage,
    AttackTemplate::UnauthorizedSensitiveAccess, AttackTemplate::PolicyViolation};

/// snake_case names used on the command line and in truth.json.
std::string_view template_name(AttackTemplate t);
std::optional<AttackTemplate> parse_template(std::string_view name);

/// Proportions of the generated entities per node kind.
struct KindMix {
  double process = 0.35;
  double file = 0.40;
  double network_connection = 0.15;
  double user = 0.05;
  double memory_object = 0.05;

  double sum() const { return process + file + network_connection + user + memory_object; }
};

struct AnomalousInjection {
  std::size_t file_reads = 0;
  std::size_t net_connects = 0;
};

struct ScenarioSpec {
  std::uint64_t seed = 0;
  std::size_t node_count = 1000;
  double edge_factor = 4.0;
  KindMix kind_mix;
  double sensitive_file_fraction = 0.05;
  std::vector<std::pair<AttackTemplate, std::size_t>> attack_injections;
  std::vector<AnomalousInjection> anomalous;
  /// Detector thresholds the benign activity is calibrated to stay under,
  /// and against which anomalous injections are labelled.
  std::int64_t file_threshold = 20;
  std::int64_t net_threshold = 10;
};

struct AnomalousEntry {
  std::string process;
  std::size_t file_reads = 0;
  std::size_t net_connects = 0;

  bool operator==(const AnomalousEntry&) const = default;
};

using LabelTuple = std::vector<std::string>;

/// Labels of what the generator injected and the detector results those
/// injections imply.
struct GroundTruth {
  /// Template name -> injected entity tuples, e.g. (I, E, F, X) for multi_stage.
  std::map<std::string, std::vector<LabelTuple>> injected;
  std::vector<AnomalousEntry> anomalous;
  /// Detector predicate name -> tuples the detector must report.
  std::map<std::string, std::set<LabelTuple>> expected;

  /// Records an anomalous process; it is expected from anomalous_process iff
  /// a count exceeds its threshold.
  void add_anomalous(const AnomalousEntry& entry, std::int64_t file_threshold, std::int64_t net_threshold);

  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
  bool operator==(const GroundTruth&) const = default;
};

struct Scenario {
  FactBase facts;
  GroundTruth truth;
};

/// Deterministic benign background activity plus the requested injections.
/// Throws Error(InfeasibleSpec) for invalid specs.
Scenario generate(const ScenarioSpec& spec);

/// Adds a fresh process with exactly `file_reads` distinct reads of
/// non-sensitive files and `net_connects` connect edges to distinct
/// connections (creating files/connections when the store has too few).
/// Timestamps are drawn from gaps in the existing timeline.
AnomalousEntry inject_anomalous_process(FactBase& facts, std::size_t file_reads, std::size_t net_connects,
                                        std::uint64_t seed = 0);

/// 64-bit FNV-1a digest, rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view data);

/// The spec as a JSON object (as recorded in manifests).
std::string spec_to_json(const ScenarioSpec& spec);
ScenarioSpec spec_from_json(const std::string& text);

/// Writes `events.jsonl`, `truth.json` and a one-entry `manifest.json`
/// into `dir` (created if missing).
void write_dataset(const std::filesystem::path& dir, const ScenarioSpec& spec, const Scenario& scenario);

/// Fixed spec used for the benchmark dataset of a given size.
ScenarioSpec benchmark_spec(std::size_t size);

struct SuiteEntry {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
};

/// One dataset per size under `out_dir/size_<n>/` plus `out_dir/manifest.json`
/// listing every spec and content digest. Sizes must be at least 100.
std::vector<SuiteEntry> emit_benchmark_suite(const std::vector<std::size_t>& sizes,
                                             const std::filesystem::path& out_dir);

/// Recomputes the digests a manifest lists; returns the files that differ.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path);

}  // namespace provlog
