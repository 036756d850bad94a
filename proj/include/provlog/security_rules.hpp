#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "provlog/engine.hpp"
#include "provlog/rule_ast.hpp"
#include "provlog/scenario.hpp"

namespace provlog {

struct PackParams {
  /// Maximum hop count for attack_path/3.
  std::int64_t depth_bound = 10;
  std::int64_t file_threshold = 20;
  std::int64_t net_threshold = 10;
  /// Also derive initial_compromise/1 from the first inbound edge of a
  /// process when that edge comes from an untrusted_source connection.
  bool derive_initial_compromise = false;
};

inline constexpr std::string_view kAlertMessage = "Unauthorized access to sensitive file";

struct PackFragment {
  std::string name;
  std::string source;
  /// Graph-store predicates the fragment's rules read.
  std::vector<PredicateSig> requires_base;
  /// Predicates the fragment defines.
  std::vector<PredicateSig> defines;
};

/// The named fragments in pack order: core, attack_path, data_exfiltration,
/// privilege_escalation, root_cause, alerts, policy, anomaly, what_if,
/// multi_stage (and initial_compromise when enabled). Throws
/// Error(InvalidProgram) for a depth bound below 1 or negative thresholds.
std::vector<PackFragment> pack_fragments(const PackParams& params = {});

/// Concatenated rule text of all fragments.
std::string pack_source(const PackParams& params = {});

/// The parsed pack.
Program builtin_pack(const PackParams& params = {});

/// The detector relations reported by `detect`, in report order.
const std::vector<PredicateSig>& detector_predicates();

struct Detection {
  Tuple tuple;
  /// Ground atom text accepted by `explain`.
  std::string proof_ref;
};

struct DetectionReport {
  /// Detector name -> sorted detections. Every detector has an entry.
  std::map<std::string, std::vector<Detection>> results;

  std::size_t total() const;
  bool empty() const { return total() == 0; }
  std::vector<LabelTuple> labels(const std::string& detector) const;

  /// `{detector: [{tuple, proof_ref}]}` in detector order.
  std::string to_json(int indent = 2) const;
  /// Human-readable summary; multi-stage findings are spelled out as the
  /// complete attack path.
  std::string summary() const;
};

/// Detector relations of an evaluated database.
DetectionReport report_from(const DerivedDatabase& db);

/// Evaluates only what the detectors need and collects their relations.
DetectionReport detect(const FactBase& facts, const Program& pack, const EvalOptions& options = {});
DetectionReport detect(Engine& engine, const Program& pack);

/// The database behind a detection run, for explanations.
DerivedDatabase detect_database(Engine& engine, const Program& pack);

struct DetectorScore {
  std::size_t reported = 0;
  std::size_t expected = 0;
  std::size_t matched = 0;
  /// matched / reported, 1.0 when nothing was reported.
  double precision = 1.0;
  /// matched / expected, 1.0 when nothing was expected.
  double recall = 1.0;
};

/// Precision and recall per detector against the truth's expected sets.
std::map<std::string, DetectorScore> score(const DetectionReport& report, const GroundTruth& truth);

}  // namespace provlog
