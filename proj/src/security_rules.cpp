#include "provlog/security_rules.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "provlog/error.hpp"
#include "provlog/rule_parser.hpp"

namespace provlog {

namespace {

struct FragmentText {
  const char* name;
  std::string source;
};

std::vector<FragmentText> fragment_texts(const PackParams& p) {
  const auto bound = std::to_string(p.depth_bound);
  std::vector<FragmentText> out = {
      {"core",
       "% Reachability, temporal ordering and causal dependency over edges.\n"
       "reachable(X, Y) :- edge(X, Y, _, _).\n"
       "reachable(X, Z) :- reachable(X, Y), edge(Y, Z, _, _).\n"
       "before(X, Y) :- edge(X, _, _, T1), edge(Y, _, _, T2), T1 < T2.\n"
       "causal_dependency(X, Y) :- edge(X, Y, _, _).\n"
       "causal_dependency(X, Z) :- causal_dependency(X, Y), causal_dependency(Y, Z).\n"},
      {"attack_path",
       "% Hop-counted reachability, bounded so the fixpoint stays finite on cycles.\n"
       "reachable(X, Y, 1) :- edge(X, Y, _, _).\n"
       "reachable(X, Z, D) :- reachable(X, Y, D1), edge(Y, Z, _, _), D is D1 + 1, D <= " +
           bound +
           ".\n"
           "attack_path(X, Y, D) :- process(X), process(Y), reachable(X, Y, D), D <= " +
           bound + ".\n"},
      {"data_exfiltration",
       "% A sensitive file is read and data is sent over a connection afterwards.\n"
       "data_exfiltration(Process, File, Connection) :- sensitive_file(File), edge(Process, File, read, T1), "
       "edge(Process, Connection, send_data, T2), network_connection(Connection), T2 > T1.\n"},
      {"privilege_escalation",
       "% A process creates a process with a higher privilege level.\n"
       "privilege_escalation(P1, P2) :- edge(P1, P2, create_process, _), process_privilege(P1, LowPriv), "
       "process_privilege(P2, HighPriv), HighPriv > LowPriv.\n"},
      {"root_cause",
       "% Causal ancestors of a compromised node that have no causal predecessor.\n"
       "root_cause(Event) :- compromised_node(Node), causal_dependency(Event, Node), "
       "not causal_dependency(_, Event).\n"},
      {"alerts",
       "% File accesses are reads, writes and opens.\n"
       "accessed_file(P, F) :- edge(P, F, read, _).\n"
       "accessed_file(P, F) :- edge(P, F, write, _).\n"
       "accessed_file(P, F) :- edge(P, F, open, _).\n"
       "generate_alert(Process, \"" +
           std::string(kAlertMessage) +
           "\") :- sensitive_file(File), accessed_file(Process, File), not authorized_process(Process).\n"},
      {"policy",
       "% send_data events as a relation, and senders that are not whitelisted.\n"
       "send_data(P, C, T) :- edge(P, C, send_data, T).\n"
       "policy_violation(Process) :- send_data(Process, _, _), not whitelisted_process(Process).\n"},
      {"anomaly",
       "% Distinct files read and distinct connections opened per process,\n"
       "% compared with threshold(FileThreshold, NetThreshold).\n"
       "threshold(" +
           std::to_string(p.file_threshold) + ", " + std::to_string(p.net_threshold) +
           ").\n"
           "count_distinct_files_accessed(Process, FileCount) :- process(Process), "
           "FileCount = #count{File : edge(Process, File, read, _)}.\n"
           "count_network_connections(Process, NetCount) :- process(Process), "
           "NetCount = #count{Conn : edge(Process, Conn, connect, _)}.\n"
           "anomalous_process(Process) :- process(Process), count_distinct_files_accessed(Process, FileCount), "
           "threshold(FileThreshold, _), FileCount > FileThreshold.\n"
           "anomalous_process(Process) :- process(Process), count_network_connections(Process, NetCount), "
           "threshold(_, NetThreshold), NetCount > NetThreshold.\n"},
      {"what_if",
       "% Everything reachable from a compromised node.\n"
       "potential_compromise(Node) :- compromised_node(Initial), reachable(Initial, Node).\n"},
      {"multi_stage",
       "% Initial compromise, then privilege escalation, then exfiltration.\n"
       "multi_stage_attack(InitialProcess, EscalatedProcess, ExfiltratedFile, ExitPoint) :- "
       "initial_compromise(InitialProcess), privilege_escalation(InitialProcess, EscalatedProcess), "
       "data_exfiltration(EscalatedProcess, ExfiltratedFile, ExitPoint).\n"},
  };
  if (p.derive_initial_compromise) {
    out.push_back(
        {"initial_compromise",
         "% A process whose first inbound edge comes from an untrusted connection.\n"
         "earlier_inbound(P, T) :- edge(_, P, _, T0), edge(_, P, _, T), T0 < T.\n"
         "initial_compromise(P) :- process(P), edge(C, P, _, T), network_connection(C), untrusted_source(C), "
         "not earlier_inbound(P, T).\n"});
  }
  return out;
}

std::vector<PredicateSig> sorted(std::set<PredicateSig> s) { return {s.begin(), s.end()}; }

}  // namespace

std::vector<PackFragment> pack_fragments(const PackParams& params) {
  if (params.depth_bound < 1) throw Error(ErrorCode::InvalidProgram, "depth bound must be at least 1");
  if (params.file_threshold < 0 || params.net_threshold < 0) {
    throw Error(ErrorCode::InvalidProgram, "thresholds must be non-negative");
  }
  const auto& base = graph_base_predicates();
  const std::set<PredicateSig> base_set(base.begin(), base.end());

  std::vector<PackFragment> out;
  for (auto& [name, source] : fragment_texts(params)) {
    const auto program = parse_program_or_throw(source);
    std::set<PredicateSig> defines, reads;
    for (const auto& r : program.rules) {
      if (r.head) defines.insert(r.head->sig());
      for (const auto& lit : r.body) {
        if (const Atom* a = literal_atom(lit); a != nullptr && base_set.contains(a->sig())) reads.insert(a->sig());
      }
    }
    out.push_back({name, std::move(source), sorted(reads), sorted(defines)});
  }
  return out;
}

std::string pack_source(const PackParams& params) {
  std::string out;
  for (const auto& f : pack_fragments(params)) {
    if (!out.empty()) out += "\n";
    out += "% --- " + f.name + " ---\n" + f.source;
  }
  return out;
}

Program builtin_pack(const PackParams& params) { return parse_program_or_throw(pack_source(params)); }

const std::vector<PredicateSig>& detector_predicates() {
  static const std::vector<PredicateSig> sigs = {
      {"multi_stage_attack", 4}, {"data_exfiltration", 3}, {"privilege_escalation", 2},
      {"attack_path", 3},        {"root_cause", 1},        {"generate_alert", 2},
      {"policy_violation", 1},   {"anomalous_process", 1}, {"potential_compromise", 1},
  };
  return sigs;
}

// --- report ----------------------------------------------------------------------

std::size_t DetectionReport::total() const {
  std::size_t n = 0;
  for (const auto& [_, v] : results) n += v.size();
  return n;
}

std::vector<LabelTuple> DetectionReport::labels(const std::string& detector) const {
  std::vector<LabelTuple> out;
  const auto it = results.find(detector);
  if (it == results.end()) return out;
  for (const auto& d : it->second) {
    LabelTuple t;
    for (const auto& c : d.tuple) t.push_back(value_text(c));
    out.push_back(std::move(t));
  }
  return out;
}

std::string DetectionReport::to_json(int indent) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& sig : detector_predicates()) {
    auto arr = nlohmann::ordered_json::array();
    if (const auto it = results.find(sig.name); it != results.end()) {
      for (const auto& d : it->second) {
        auto tuple = nlohmann::ordered_json::array();
        for (const auto& c : d.tuple) {
          if (c.is_integer()) {
            tuple.push_back(c.number);
          } else {
            tuple.push_back(c.text);
          }
        }
        arr.push_back({{"tuple", std::move(tuple)}, {"proof_ref", d.proof_ref}});
      }
    }
    j[sig.name] = std::move(arr);
  }
  return j.dump(indent);
}

std::string DetectionReport::summary() const {
  if (empty()) return "no detections\n";
  std::string out;
  for (const auto& sig : detector_predicates()) {
    const auto it = results.find(sig.name);
    if (it == results.end() || it->second.empty()) continue;
    out += sig.name + ": " + std::to_string(it->second.size()) + "\n";
    for (const auto& d : it->second) {
      out += "  " + d.proof_ref + "\n";
      if (sig.name == "multi_stage_attack") {
        out += "    complete attack path: initial compromise " + value_text(d.tuple[0]) +
               " -> escalated process " + value_text(d.tuple[1]) + " -> exfiltrated file " +
               value_text(d.tuple[2]) + " -> exit point " + value_text(d.tuple[3]) + "\n";
      }
    }
  }
  return out;
}

DetectionReport report_from(const DerivedDatabase& db) {
  DetectionReport report;
  for (const auto& sig : detector_predicates()) {
    auto& list = report.results[sig.name];
    for (auto& t : db.tuples(sig)) {
      const std::string ref = GroundAtom{sig.name, t}.str();
      list.push_back({std::move(t), ref});
    }
  }
  return report;
}

DerivedDatabase detect_database(Engine& engine, const Program& pack) {
  std::set<PredicateSig> defined;
  for (const auto& r : pack.rules) {
    if (r.head) defined.insert(r.head->sig());
  }
  std::vector<PredicateSig> goals;
  for (const auto& sig : detector_predicates()) {
    if (defined.contains(sig)) goals.push_back(sig);
  }
  return engine.materialize_for(pack, goals);
}

DetectionReport detect(Engine& engine, const Program& pack) { return report_from(detect_database(engine, pack)); }

DetectionReport detect(const FactBase& facts, const Program& pack, const EvalOptions& options) {
  Engine engine(facts, options);
  return detect(engine, pack);
}

std::map<std::string, DetectorScore> score(const DetectionReport& report, const GroundTruth& truth) {
  std::map<std::string, DetectorScore> out;
  for (const auto& sig : detector_predicates()) {
    const auto labels = report.labels(sig.name);
    const std::set<LabelTuple> reported(labels.begin(), labels.end());
    std::set<LabelTuple> expected;
    if (const auto it = truth.expected.find(sig.name); it != truth.expected.end()) expected = it->second;

    DetectorScore s;
    s.reported = reported.size();
    s.expected = expected.size();
    for (const auto& t : reported) s.matched += expected.contains(t) ? 1 : 0;
    s.precision = s.reported == 0 ? 1.0 : static_cast<double>(s.matched) / static_cast<double>(s.reported);
    s.recall = s.expected == 0 ? 1.0 : static_cast<double>(s.matched) / static_cast<double>(s.expected);
    out.emplace(sig.name, s);
  }
  return out;
}

}  // namespace provlog
