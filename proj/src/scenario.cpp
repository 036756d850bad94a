#include "provlog/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "provlog/error.hpp"
#include "provlog/event_io.hpp"

namespace provlog {

namespace {

constexpr std::string_view kAlertText = "Unauthorized access to sensitive file";

/// Portable sampling on top of mt19937_64, whose output sequence is fixed by
/// the C++ standard. The standard distributions are implementation-defined,
/// so bounded integers and reals are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  /// Index drawn with probability proportional to 1 / (rank + 1).
  std::size_t zipf(std::size_t n) {
    if (cumulative_.size() != n) {
      cumulative_.resize(n);
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) cumulative_[i] = acc += 1.0 / static_cast<double>(i + 1);
    }
    const double x = unit() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), n - 1);
  }

 private:
  std::mt19937_64 gen_;
  std::vector<double> cumulative_;
};

struct PendingEdge {
  EntityId from;
  EntityId to;
  std::string op;
  Timestamp ts = 0;
};

/// Largest-remainder apportionment of `n` over the kind proportions.
std::vector<std::size_t> apportion(std::size_t n, const KindMix& mix) {
  const double shares[] = {mix.process, mix.file, mix.network_connection, mix.user, mix.memory_object};
  std::vector<std::size_t> counts(5);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double exact = shares[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k, ++assigned) ++counts[remainders[k].second];
  return counts;
}

/// Shared state for placing facts into a store: entity pools, label
/// counters and the set of used timestamps. Edges either go straight into
/// the store or are buffered so the caller can emit them in time order.
class Builder {
 public:
  Builder(FactBase& facts, Rng& rng, std::vector<PendingEdge>* pending)
      : fb_(facts), rng_(rng), pending_(pending) {
    for (const auto kind : kAllNodeKinds) pool(kind) = fb_.nodes_of_kind(kind);
    for (const auto& t : fb_.attribute("sensitive_file")) sensitive_.insert(std::get<EntityId>(t[0]));
    for (const auto& e : fb_.edges()) note_time(e.ts);
  }

  FactBase& facts() { return fb_; }
  std::vector<EntityId>& pool(NodeKind kind) { return pools_[static_cast<std::size_t>(kind)]; }
  bool is_sensitive(EntityId f) const { return sensitive_.contains(f); }

  EntityId fresh(NodeKind kind, bool sensitive = false) {
    static constexpr char kPrefix[] = {'p', 'f', 'c', 'u', 'm'};
    const auto k = static_cast<std::size_t>(kind);
    for (;;) {
      const std::string label = kPrefix[k] + std::to_string(next_label_[k]++);
      if (fb_.find(label)) continue;
      const auto id = fb_.intern(label);
      fb_.add_node(id, kind);
      pool(kind).push_back(id);
      describe(id, kind, pool(kind).size() - 1, sensitive);
      return id;
    }
  }

  void describe(EntityId id, NodeKind kind, std::size_t ordinal, bool sensitive) {
    static const char* kNames[] = {"bash", "sshd", "python3", "nginx", "cron", "java", "postgres", "chrome"};
    const std::string label(fb_.label(id));
    switch (kind) {
      case NodeKind::Process:
        fb_.assert_attribute("process_name", {id, std::string(kNames[rng_.below(8)])});
        break;
      case NodeKind::File:
        if (sensitive) {
          sensitive_.insert(id);
          fb_.assert_attribute("sensitive_file", {id});
          fb_.assert_attribute("file_path", {id, "/etc/secure/" + label + ".key"});
        } else {
          fb_.assert_attribute("file_path", {id, "/home/data/" + label + ".dat"});
        }
        break;
      case NodeKind::NetworkConnection:
        fb_.assert_attribute("network_address",
                             {id, "10." + std::to_string(ordinal / 250 % 250) + "." + std::to_string(ordinal % 250) +
                                      "." + std::to_string(1 + rng_.below(254)) + ":" +
                                      std::to_string(1024 + rng_.below(60000))});
        break;
      case NodeKind::User: fb_.assert_attribute("user_name", {id, "user_" + label}); break;
      case NodeKind::MemoryObject:
        fb_.assert_attribute("memory_address", {id, static_cast<std::int64_t>(4096 * (ordinal + 1))});
        break;
    }
  }

  void set_privilege(EntityId p, std::int64_t level) { fb_.assert_attribute("process_privilege", {p, level}); }

  void note_time(Timestamp ts) {
    used_.insert(ts);
    horizon_ = std::max(horizon_, ts);
  }

  /// `n` distinct unused timestamps inside (or just past) the timeline, ascending.
  std::vector<Timestamp> gap_times(std::size_t n) {
    const Timestamp upper = horizon_ + 16 * (n + 1) + 2 * used_.size() / 15 + 16;
    std::vector<Timestamp> out;
    while (out.size() < n) {
      const Timestamp t = 1 + rng_.below(upper);
      if (used_.contains(t)) continue;
      used_.insert(t);
      out.push_back(t);
    }
    std::sort(out.begin(), out.end());
    for (const auto t : out) horizon_ = std::max(horizon_, t);
    return out;
  }

  void edge(EntityId from, EntityId to, const std::string& op, Timestamp ts) {
    if (pending_ != nullptr) {
      pending_->push_back({from, to, op, ts});
    } else {
      fb_.add_edge(from, to, op, ts);
    }
  }

  /// Fresh process, spawned by a random user when there is one.
  EntityId spawned_process(std::int64_t privilege, std::vector<Timestamp>& times, std::size_t& next) {
    const auto p = fresh(NodeKind::Process);
    set_privilege(p, privilege);
    if (!pool(NodeKind::User).empty()) edge(rng_.pick(pool(NodeKind::User)), p, "spawn", times[next++]);
    return p;
  }

  std::size_t spawn_slots() { return pool(NodeKind::User).empty() ? 0 : 1; }

  EntityId some_sensitive_file() {
    std::vector<EntityId> files(sensitive_.begin(), sensitive_.end());
    if (!files.empty()) return rng_.pick(files);
    return fresh(NodeKind::File, true);
  }

  EntityId some_connection() {
    if (!pool(NodeKind::NetworkConnection).empty()) return rng_.pick(pool(NodeKind::NetworkConnection));
    return fresh(NodeKind::NetworkConnection);
  }

  Rng& rng() { return rng_; }

 private:
  FactBase& fb_;
  Rng& rng_;
  std::vector<PendingEdge>* pending_;
  std::vector<EntityId> pools_[5];
  std::set<EntityId> sensitive_;
  std::size_t next_label_[5] = {};
  std::set<Timestamp> used_;
  Timestamp horizon_ = 0;
};

std::string label(const FactBase& fb, EntityId id) { return std::string(fb.label(id)); }

void expect(GroundTruth& truth, const std::string& detector, LabelTuple tuple) {
  truth.expected[detector].insert(std::move(tuple));
}

void inject_template(Builder& b, AttackTemplate t, GroundTruth& truth) {
  const auto& fb = b.facts();
  switch (t) {
    case AttackTemplate::MultiStage: {
      const auto f = b.some_sensitive_file();
      auto times = b.gap_times(b.spawn_slots() + 3);
      std::size_t k = 0;
      const auto i = b.spawned_process(1, times, k);
      const auto e = b.fresh(NodeKind::Process);
      b.set_privilege(e, 3);
      const auto x = b.fresh(NodeKind::NetworkConnection);
      b.facts().assert_attribute("initial_compromise", {i});
      b.edge(i, e, "create_process", times[k++]);
      b.edge(e, f, "read", times[k++]);
      b.edge(e, x, "send_data", times[k++]);
      const auto I = label(fb, i), E = label(fb, e), F = label(fb, f), X = label(fb, x);
      truth.injected["multi_stage"].push_back({I, E, F, X});
      expect(truth, "multi_stage_attack", {I, E, F, X});
      expect(truth, "privilege_escalation", {I, E});
      expect(truth, "data_exfiltration", {E, F, X});
      expect(truth, "attack_path", {I, E, "1"});
      expect(truth, "generate_alert", {E, std::string(kAlertText)});
      expect(truth, "policy_violation", {E});
      break;
    }
    case AttackTemplate::PrivilegeEscalation: {
      auto times = b.gap_times(b.spawn_slots() + 1);
      std::size_t k = 0;
      const auto low = 1 + static_cast<std::int64_t>(b.rng().below(2));
      const auto p1 = b.spawned_process(low, times, k);
      const auto p2 = b.fresh(NodeKind::Process);
      b.set_privilege(p2, low + 1 + static_cast<std::int64_t>(b.rng().below(static_cast<std::uint64_t>(3 - low))));
      b.edge(p1, p2, "create_process", times[k++]);
      const auto P1 = label(fb, p1), P2 = label(fb, p2);
      truth.injected["privilege_escalation"].push_back({P1, P2});
      expect(truth, "privilege_escalation", {P1, P2});
      expect(truth, "attack_path", {P1, P2, "1"});
      break;
    }
    case AttackTemplate::DataExfiltration: {
      const auto f = b.some_sensitive_file();
      const auto x = b.some_connection();
      auto times = b.gap_times(b.spawn_slots() + 2);
      std::size_t k = 0;
      const auto p = b.spawned_process(1 + static_cast<std::int64_t>(b.rng().below(3)), times, k);
      b.edge(p, f, "read", times[k++]);
      b.edge(p, x, "send_data", times[k++]);
      const auto P = label(fb, p), F = label(fb, f), X = label(fb, x);
      truth.injected["data_exfiltration"].push_back({P, F, X});
      expect(truth, "data_exfiltration", {P, F, X});
      expect(truth, "generate_alert", {P, std::string(kAlertText)});
      expect(truth, "policy_violation", {P});
      break;
    }
    case AttackTemplate::UnauthorizedSensitiveAccess: {
      const auto f = b.some_sensitive_file();
      auto times = b.gap_times(b.spawn_slots() + 1);
      std::size_t k = 0;
      const auto p = b.spawned_process(1 + static_cast<std::int64_t>(b.rng().below(3)), times, k);
      b.edge(p, f, "open", times[k++]);
      const auto P = label(fb, p), F = label(fb, f);
      truth.injected["unauthorized_sensitive_access"].push_back({P, F});
      expect(truth, "generate_alert", {P, std::string(kAlertText)});
      break;
    }
    case AttackTemplate::PolicyViolation: {
      const auto c = b.some_connection();
      auto times = b.gap_times(b.spawn_slots() + 1);
      std::size_t k = 0;
      const auto p = b.spawned_process(1 + static_cast<std::int64_t>(b.rng().below(3)), times, k);
      b.edge(p, c, "send_data", times[k++]);
      const auto P = label(fb, p), C = label(fb, c);
      truth.injected["policy_violation"].push_back({P, C});
      expect(truth, "policy_violation", {P});
      break;
    }
  }
}

AnomalousEntry inject_anomalous(Builder& b, std::size_t file_reads, std::size_t net_connects) {
  auto& rng = b.rng();
  std::vector<EntityId> files;
  for (const auto f : b.pool(NodeKind::File)) {
    if (!b.is_sensitive(f)) files.push_back(f);
  }
  rng.shuffle(files);
  files.resize(std::min(files.size(), file_reads));
  while (files.size() < file_reads) files.push_back(b.fresh(NodeKind::File));

  std::vector<EntityId> conns = b.pool(NodeKind::NetworkConnection);
  rng.shuffle(conns);
  conns.resize(std::min(conns.size(), net_connects));
  while (conns.size() < net_connects) conns.push_back(b.fresh(NodeKind::NetworkConnection));

  auto times = b.gap_times(b.spawn_slots() + file_reads + net_connects);
  std::size_t k = 0;
  const auto p = b.spawned_process(1, times, k);
  std::vector<std::pair<EntityId, const char*>> actions;
  for (const auto f : files) actions.emplace_back(f, "read");
  for (const auto c : conns) actions.emplace_back(c, "connect");
  rng.shuffle(actions);
  for (const auto& [target, op] : actions) b.edge(p, target, op, times[k++]);
  return {std::string(b.facts().label(p)), file_reads, net_connects};
}

void validate_spec(const ScenarioSpec& spec) {
  const auto fail = [](const std::string& msg) { throw Error(ErrorCode::InfeasibleSpec, msg); };
  const auto& m = spec.kind_mix;
  for (const double share : {m.process, m.file, m.network_connection, m.user, m.memory_object}) {
    if (!(share >= 0.0)) fail("kind proportions must be non-negative");
  }
  if (std::abs(m.sum() - 1.0) > 1e-9) fail("kind proportions sum to " + std::to_string(m.sum()) + ", not 1");
  if (spec.node_count == 0) fail("node count must be positive");
  if (!(spec.edge_factor >= 0.0)) fail("edge factor must be non-negative");
  if (!(spec.sensitive_file_fraction >= 0.0 && spec.sensitive_file_fraction <= 1.0)) {
    fail("sensitive file fraction must lie in [0, 1]");
  }
  if (spec.file_threshold < 0 || spec.net_threshold < 0) fail("thresholds must be non-negative");
  std::size_t injections = spec.anomalous.size();
  for (const auto& [_, n] : spec.attack_injections) injections += n;
  if (injections > 0 && spec.node_count < 10) fail("injections need at least 10 nodes");
  if (injections > 0 && m.process <= 0.0) fail("injections need a non-zero process proportion");
}

/// Benign background: users spawn processes; processes touch a small
/// working set of files (and, for network roles, a few connections).
void generate_benign(const ScenarioSpec& spec, Builder& b, std::vector<PendingEdge>& pending) {
  auto& rng = b.rng();
  auto& fb = b.facts();
  const auto counts = apportion(spec.node_count, spec.kind_mix);
  // Sensitive files are spread over the popularity ranking.
  const std::size_t n_files = counts[static_cast<std::size_t>(NodeKind::File)];
  std::size_t n_sensitive = 0;
  if (n_files > 0 && spec.sensitive_file_fraction > 0) {
    n_sensitive = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.sensitive_file_fraction * static_cast<double>(n_files))));
  }
  std::vector<char> sensitive(n_files, 0);
  for (std::size_t i = 0; i < n_sensitive && i < n_files; ++i) sensitive[i] = 1;
  rng.shuffle(sensitive);

  // Registration order: users, processes, files, connections, memory.
  const NodeKind order[] = {NodeKind::User, NodeKind::Process, NodeKind::File, NodeKind::NetworkConnection,
                            NodeKind::MemoryObject};
  for (const auto kind : order) {
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(kind)]; ++i) {
      b.fresh(kind, kind == NodeKind::File && sensitive[i] != 0);
    }
  }
  const auto files = b.pool(NodeKind::File);
  const auto conns = b.pool(NodeKind::NetworkConnection);
  const auto mems = b.pool(NodeKind::MemoryObject);
  const auto users = b.pool(NodeKind::User);
  const auto procs = b.pool(NodeKind::Process);

  std::vector<EntityId> plain;
  for (const auto f : files) {
    if (!b.is_sensitive(f)) plain.push_back(f);
  }

  const auto file_cap = static_cast<std::size_t>(std::min<std::int64_t>(12, spec.file_threshold));
  const auto conn_cap = static_cast<std::size_t>(std::min<std::int64_t>(6, spec.net_threshold));
  const auto draw_set = [&](const std::vector<EntityId>& from, std::size_t cap) {
    std::vector<EntityId> out;
    if (from.empty() || cap == 0) return out;
    const std::size_t want = 1 + rng.below(std::min(cap, from.size()));
    for (std::size_t attempt = 0; out.size() < want && attempt < 8 * want; ++attempt) {
      const auto f = from[rng.zipf(from.size())];
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
    return out;
  };

  struct Role {
    bool net = false;
    std::vector<EntityId> files;
    std::vector<EntityId> conns;
  };
  std::vector<Role> roles(procs.size());
  for (std::size_t i = 0; i < procs.size(); ++i) {
    auto& r = roles[i];
    b.set_privilege(procs[i], 1 + static_cast<std::int64_t>(rng.below(3)));
    r.net = !conns.empty() && conn_cap > 0 && rng.unit() < 0.3;
    if (r.net) {
      r.files = draw_set(plain, file_cap);
      r.conns = draw_set(conns, conn_cap);
      fb.assert_attribute("whitelisted_process", {procs[i]});
    } else {
      r.files = draw_set(files, file_cap);
      if (std::any_of(r.files.begin(), r.files.end(), [&](EntityId f) { return b.is_sensitive(f); })) {
        fb.assert_attribute("authorized_process", {procs[i]});
      }
    }
  }

  const auto total = static_cast<std::size_t>(std::llround(spec.edge_factor * static_cast<double>(spec.node_count)));
  const std::size_t spawns = users.empty() ? 0 : procs.size();
  const std::size_t activity = procs.empty() || total <= spawns ? 0 : total - spawns;

  std::vector<PendingEdge> events;
  for (std::size_t n = 0; n < activity; ++n) {
    const auto pi = rng.below(procs.size());
    const auto& r = roles[pi];
    const double x = rng.unit();
    const char* op = nullptr;
    std::optional<EntityId> target;
    if (r.net) {
      if (x < 0.35 && !r.conns.empty()) {
        op = "connect";
        target = rng.pick(r.conns);
      } else if (x < 0.6 && !r.conns.empty()) {
        op = "send_data";
        target = rng.pick(r.conns);
      } else if (!r.files.empty()) {
        op = x < 0.85 ? "read" : "write";
        target = rng.pick(r.files);
      }
    } else {
      if (x < 0.9 && !r.files.empty()) {
        op = x < 0.5 ? "read" : (x < 0.75 ? "write" : "open");
        target = rng.pick(r.files);
      } else if (!mems.empty()) {
        op = "mmap";
        target = rng.pick(mems);
      } else if (!r.files.empty()) {
        op = "read";
        target = rng.pick(r.files);
      }
    }
    if (op != nullptr) events.push_back({procs[pi], *target, op, 0});
  }

  // Each process's spawn precedes its first activity.
  std::vector<bool> spawned(fb.interned_count(), false);
  std::vector<PendingEdge> emitted;
  const auto spawn = [&](EntityId p) {
    if (users.empty() || spawned[p.index]) return;
    spawned[p.index] = true;
    emitted.push_back({rng.pick(users), p, "spawn", 0});
  };
  for (const auto& e : events) {
    spawn(e.from);
    emitted.push_back(e);
  }
  for (const auto p : procs) spawn(p);
  for (std::size_t i = 0; i < emitted.size(); ++i) {
    emitted[i].ts = 16 * (i + 1);
    b.note_time(emitted[i].ts);
  }
  pending.insert(pending.end(), emitted.begin(), emitted.end());
}

nlohmann::ordered_json spec_json(const ScenarioSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = spec.seed;
  j["node_count"] = spec.node_count;
  j["edge_factor"] = spec.edge_factor;
  j["kind_mix"] = {{"process", spec.kind_mix.process},
                   {"file", spec.kind_mix.file},
                   {"network_connection", spec.kind_mix.network_connection},
                   {"user", spec.kind_mix.user},
                   {"memory_object", spec.kind_mix.memory_object}};
  j["sensitive_file_fraction"] = spec.sensitive_file_fraction;
  auto inj = nlohmann::ordered_json::array();
  for (const auto& [t, n] : spec.attack_injections) inj.push_back({{"template", template_name(t)}, {"count", n}});
  j["attack_injections"] = std::move(inj);
  auto anomalous = nlohmann::ordered_json::array();
  for (const auto& a : spec.anomalous) {
    anomalous.push_back({{"file_reads", a.file_reads}, {"net_connects", a.net_connects}});
  }
  j["anomalous"] = std::move(anomalous);
  j["file_threshold"] = spec.file_threshold;
  j["net_threshold"] = spec.net_threshold;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes events and truth into `dir`; returns the manifest entry.
nlohmann::ordered_json write_files(const std::filesystem::path& dir, const std::string& rel_dir,
                                   const ScenarioSpec& spec, const Scenario& scenario) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto events = export_events(scenario.facts);
  const auto truth = scenario.truth.to_json();
  write_file(dir / "events.jsonl", events);
  write_file(dir / "truth.json", truth);
  nlohmann::ordered_json entry;
  entry["dir"] = rel_dir;
  entry["size"] = spec.node_count;
  entry["seed"] = spec.seed;
  entry["spec"] = spec_json(spec);
  entry["nodes"] = scenario.facts.node_count();
  entry["edges"] = scenario.facts.edge_count();
  entry["files"] = {{"events.jsonl", "fnv1a64:" + fnv1a64_hex(events)},
                    {"truth.json", "fnv1a64:" + fnv1a64_hex(truth)}};
  return entry;
}

void write_manifest(const std::filesystem::path& path, nlohmann::ordered_json datasets) {
  nlohmann::ordered_json m;
  m["generator"] = "provlog";
  m["random_source"] = "mt19937_64";
  m["digest"] = "fnv1a64";
  m["datasets"] = std::move(datasets);
  write_file(path, m.dump(2) + "\n");
}

}  // namespace

std::string_view template_name(AttackTemplate t) {
  switch (t) {
    case AttackTemplate::DataExfiltration: return "data_exfiltration";
    case AttackTemplate::PrivilegeEscalation: return "privilege_escalation";
    case AttackTemplate::MultiStage: return "multi_stage";
    case AttackTemplate::UnauthorizedSensitiveAccess: return "unauthorized_sensitive_access";
    case AttackTemplate::PolicyViolation: return "policy_violation";
  }
  return "unknown";
}

std::optional<AttackTemplate> parse_template(std::string_view name) {
  for (const auto t : kAllTemplates) {
    if (template_name(t) == name) return t;
  }
  return std::nullopt;
}

void GroundTruth::add_anomalous(const AnomalousEntry& entry, std::int64_t file_threshold,
                                std::int64_t net_threshold) {
  anomalous.push_back(entry);
  if (static_cast<std::int64_t>(entry.file_reads) > file_threshold ||
      static_cast<std::int64_t>(entry.net_connects) > net_threshold) {
    expected["anomalous_process"].insert({entry.process});
  }
}

std::string GroundTruth::to_json() const {
  nlohmann::ordered_json j;
  j["injected"] = nlohmann::ordered_json::object();
  for (const auto& [name, tuples] : injected) j["injected"][name] = tuples;
  auto anomalies = nlohmann::ordered_json::array();
  for (const auto& a : anomalous) {
    anomalies.push_back({{"process", a.process}, {"file_reads", a.file_reads}, {"net_connects", a.net_connects}});
  }
  j["anomalous"] = std::move(anomalies);
  j["expected"] = nlohmann::ordered_json::object();
  for (const auto& [name, tuples] : expected) {
    j["expected"][name] = std::vector<LabelTuple>(tuples.begin(), tuples.end());
  }
  return j.dump(2) + "\n";
}

GroundTruth GroundTruth::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GroundTruth t;
    for (const auto& [name, tuples] : j.at("injected").items()) {
      t.injected[name] = tuples.get<std::vector<LabelTuple>>();
    }
    for (const auto& a : j.at("anomalous")) {
      t.anomalous.push_back({a.at("process").get<std::string>(), a.at("file_reads").get<std::size_t>(),
                             a.at("net_connects").get<std::size_t>()});
    }
    for (const auto& [name, tuples] : j.at("expected").items()) {
      const auto v = tuples.get<std::vector<LabelTuple>>();
      t.expected[name] = std::set<LabelTuple>(v.begin(), v.end());
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed truth file: ") + e.what());
  }
}

Scenario generate(const ScenarioSpec& spec) {
  validate_spec(spec);
  Scenario s;
  Rng rng(spec.seed);
  std::vector<PendingEdge> pending;
  Builder b(s.facts, rng, &pending);
  generate_benign(spec, b, pending);
  for (const auto& [t, n] : spec.attack_injections) {
    for (std::size_t i = 0; i < n; ++i) inject_template(b, t, s.truth);
  }
  for (const auto& a : spec.anomalous) {
    s.truth.add_anomalous(inject_anomalous(b, a.file_reads, a.net_connects), spec.file_threshold,
                          spec.net_threshold);
  }
  // Emit in time order so timestamps increase with emission.
  std::sort(pending.begin(), pending.end(), [](const auto& x, const auto& y) { return x.ts < y.ts; });
  for (const auto& e : pending) s.facts.add_edge(e.from, e.to, e.op, e.ts);
  return s;
}

AnomalousEntry inject_anomalous_process(FactBase& facts, std::size_t file_reads, std::size_t net_connects,
                                        std::uint64_t seed) {
  Rng rng(seed);
  Builder b(facts, rng, nullptr);
  return inject_anomalous(b, file_reads, net_connects);
}

std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

std::string spec_to_json(const ScenarioSpec& spec) { return spec_json(spec).dump(); }

ScenarioSpec spec_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ScenarioSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.node_count = j.at("node_count").get<std::size_t>();
    s.edge_factor = j.at("edge_factor").get<double>();
    const auto& m = j.at("kind_mix");
    s.kind_mix = {m.at("process").get<double>(), m.at("file").get<double>(),
                  m.at("network_connection").get<double>(), m.at("user").get<double>(),
                  m.at("memory_object").get<double>()};
    s.sensitive_file_fraction = j.at("sensitive_file_fraction").get<double>();
    for (const auto& inj : j.at("attack_injections")) {
      const auto name = inj.at("template").get<std::string>();
      const auto t = parse_template(name);
      if (!t) throw Error(ErrorCode::ParseError, "unknown attack template '" + name + "'");
      s.attack_injections.emplace_back(*t, inj.at("count").get<std::size_t>());
    }
    for (const auto& a : j.at("anomalous")) {
      s.anomalous.push_back({a.at("file_reads").get<std::size_t>(), a.at("net_connects").get<std::size_t>()});
    }
    s.file_threshold = j.at("file_threshold").get<std::int64_t>();
    s.net_threshold = j.at("net_threshold").get<std::int64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed scenario spec: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& dir, const ScenarioSpec& spec, const Scenario& scenario) {
  auto entry = write_files(dir, ".", spec, scenario);
  write_manifest(dir / "manifest.json", nlohmann::ordered_json::array({std::move(entry)}));
}

ScenarioSpec benchmark_spec(std::size_t size) {
  ScenarioSpec spec;
  spec.seed = 20240000 + size;
  spec.node_count = size;
  spec.attack_injections = {{AttackTemplate::MultiStage, 1},
                            {AttackTemplate::DataExfiltration, 1},
                            {AttackTemplate::PrivilegeEscalation, 1},
                            {AttackTemplate::UnauthorizedSensitiveAccess, 1},
                            {AttackTemplate::PolicyViolation, 1}};
  spec.anomalous = {{25, 0}, {0, 15}, {30, 12}};
  return spec;
}

std::vector<SuiteEntry> emit_benchmark_suite(const std::vector<std::size_t>& sizes,
                                             const std::filesystem::path& out_dir) {
  for (const auto n : sizes) {
    if (n < 100) throw Error(ErrorCode::InfeasibleSpec, "benchmark sizes must be at least 100, got " + std::to_string(n));
  }
  std::vector<SuiteEntry> out;
  auto datasets = nlohmann::ordered_json::array();
  for (const auto n : sizes) {
    const auto spec = benchmark_spec(n);
    const auto scenario = generate(spec);
    const std::string rel = "size_" + std::to_string(n);
    datasets.push_back(write_files(out_dir / rel, rel, spec, scenario));
    out.push_back({n, spec.seed, out_dir / rel});
  }
  write_manifest(out_dir / "manifest.json", std::move(datasets));
  return out;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& manifest_path) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed manifest: ") + e.what());
  }
  std::vector<std::string> mismatches;
  const auto root = manifest_path.parent_path();
  for (const auto& d : m.at("datasets")) {
    const auto dir = root / d.at("dir").get<std::string>();
    for (const auto& [name, digest] : d.at("files").items()) {
      const auto path = dir / name;
      std::string actual;
      try {
        actual = "fnv1a64:" + fnv1a64_hex(read_file(path));
      } catch (const Error&) {
        actual = "missing";
      }
      if (actual != digest.get<std::string>()) mismatches.push_back((dir / name).lexically_normal().string());
    }
  }
  return mismatches;
}

}  // namespace provlog
