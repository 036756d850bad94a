// provlog: generate provenance datasets, evaluate rules over them, detect
// attacks, explain findings and benchmark queries.
//
// Exit status: 0 success (and no detections), 1 usage error, 2 parse,
// validation or evaluation error, 3 detections found.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "provlog/engine.hpp"
#include "provlog/error.hpp"
#include "provlog/event_io.hpp"
#include "provlog/proof.hpp"
#include "provlog/rule_analysis.hpp"
#include "provlog/rule_parser.hpp"
#include "provlog/scenario.hpp"
#include "provlog/security_rules.hpp"

namespace {

using namespace provlog;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitFindings = 3;

/// Diagnostics that were already printed; carries only the exit status.
struct Reported {
  int status;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

// --- shared configuration --------------------------------------------------------

struct RunConfig {
  std::string facts;
  std::vector<std::string> rules;
  bool no_pack = false;
  PackParams pack;
  std::size_t max_derived = kDefaultMaxDerivedTuples;
  std::string format = "text";
  std::string out;
};

void add_pack_options(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--depth-bound", cfg.pack.depth_bound, "Maximum hop count for attack_path/3")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd.add_option("--file-threshold", cfg.pack.file_threshold, "Distinct files read before a process is anomalous")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--net-threshold", cfg.pack.net_threshold, "Distinct connections before a process is anomalous")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd.add_flag("--derive-initial-compromise", cfg.pack.derive_initial_compromise,
               "Derive initial_compromise/1 from untrusted inbound connections");
}

void add_eval_options(CLI::App& cmd, RunConfig& cfg) {
  cmd.add_option("--facts", cfg.facts, "JSONL event file")->required();
  cmd.add_option("--rules", cfg.rules, "Rule file(s) evaluated together with the built-in pack");
  cmd.add_flag("--no-pack", cfg.no_pack, "Evaluate only the --rules files");
  cmd.add_option("--max-derived", cfg.max_derived, "Derived tuple limit")->capture_default_str();
  add_pack_options(cmd, cfg);
}

FactBase load_facts(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::Io, "no such file: " + path);
  return load_events_file(path);
}

Program load_program(const RunConfig& cfg) {
  std::string source = cfg.no_pack ? std::string() : pack_source(cfg.pack);
  for (const auto& path : cfg.rules) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::Io, "no such file: " + path);
    source += "\n% --- " + path + " ---\n" + read_text(path);
  }
  auto parsed = parse_program(source);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics) std::cerr << "error: " << d.str() << "\n";
    throw Reported{kExitInvalid};
  }
  if (const auto diags = validate(parsed.program); !diags.empty()) {
    for (const auto& d : diags) std::cerr << "error: " << d.str() << "\n";
    throw Reported{kExitInvalid};
  }
  return std::move(parsed.program);
}

// --- generate --------------------------------------------------------------------

struct GenerateArgs {
  ScenarioSpec spec;
  std::vector<std::string> inject;
  std::vector<std::string> anomalous;
  std::vector<std::size_t> sizes;
  std::string out;
};

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || text.front() == '-') {
    throw CLI::ValidationError(what, "'" + text + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(n);
}

int run_generate(GenerateArgs& args) {
  if (!args.sizes.empty()) {
    const auto suite = emit_benchmark_suite(args.sizes, args.out);
    for (const auto& e : suite) std::cout << "size " << e.size << " seed " << e.seed << " -> " << e.dir.string() << "\n";
    std::cout << "manifest " << (std::filesystem::path(args.out) / "manifest.json").string() << "\n";
    return kExitOk;
  }
  for (const auto& item : args.inject) {
    const auto eq = item.find('=');
    const auto name = item.substr(0, eq);
    const auto t = parse_template(name);
    if (!t) throw CLI::ValidationError("--inject", "unknown template '" + name + "'");
    const std::size_t count = eq == std::string::npos ? 1 : parse_count(item.substr(eq + 1), "--inject");
    args.spec.attack_injections.emplace_back(*t, count);
  }
  for (const auto& item : args.anomalous) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--anomalous", "expected READS:CONNECTS");
    args.spec.anomalous.push_back(
        {parse_count(item.substr(0, colon), "--anomalous"), parse_count(item.substr(colon + 1), "--anomalous")});
  }
  const auto scenario = generate(args.spec);
  write_dataset(args.out, args.spec, scenario);
  std::cout << "wrote " << scenario.facts.node_count() << " nodes, " << scenario.facts.edge_count() << " edges to "
            << args.out << "\n";
  return kExitOk;
}

// --- ingest ----------------------------------------------------------------------

int run_ingest(const RunConfig& cfg) {
  const auto facts = load_facts(cfg.facts);
  std::cout << "nodes " << facts.node_count() << "\n";
  for (const auto kind : kAllNodeKinds) {
    std::cout << "  " << kind_name(kind) << " " << facts.nodes_of_kind(kind).size() << "\n";
  }
  std::cout << "edges " << facts.edge_count() << "\n";
  std::cout << "attributes " << facts.attribute_count() << "\n";
  if (!cfg.out.empty()) write_text(cfg.out, export_events(facts));
  return kExitOk;
}

// --- query -----------------------------------------------------------------------

int run_query(const RunConfig& cfg, const std::string& text) {
  auto parsed = parse_query(text);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics) std::cerr << "error: " << d.str() << "\n";
    return kExitInvalid;
  }
  const auto facts = load_facts(cfg.facts);
  const auto program = load_program(cfg);
  Engine engine(facts, {cfg.max_derived, false});
  const auto result = engine.query(parsed.query, program);
  if (cfg.format == "json") {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : result.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i].is_integer()) {
          obj[result.variables[i]] = row[i].number;
        } else {
          obj[result.variables[i]] = row[i].text;
        }
      }
      rows.push_back(std::move(obj));
    }
    std::cout << rows.dump(2) << "\n";
  } else {
    for (const auto& line : result.lines()) std::cout << line << "\n";
  }
  return kExitOk;
}

// --- detect ----------------------------------------------------------------------

int run_detect(const RunConfig& cfg, const std::string& truth_path) {
  const auto facts = load_facts(cfg.facts);
  const auto program = load_program(cfg);
  Engine engine(facts, {cfg.max_derived, false});
  const auto report = detect(engine, program);
  const auto json = report.to_json(2) + "\n";
  if (!cfg.out.empty()) write_text(cfg.out, json);
  if (cfg.format == "json") {
    std::cout << json;
  } else {
    std::cout << report.summary();
  }
  if (!truth_path.empty()) {
    const auto truth = GroundTruth::from_json(read_text(truth_path));
    std::cout << "detector                  reported expected matched precision recall\n";
    for (const auto& [name, s] : score(report, truth)) {
      std::cout << std::left << std::setw(26) << name << std::right << std::setw(8) << s.reported << std::setw(9)
                << s.expected << std::setw(8) << s.matched << std::fixed << std::setprecision(3) << std::setw(10)
                << s.precision << std::setw(7) << s.recall << "\n";
    }
  }
  return report.empty() ? kExitOk : kExitFindings;
}

// --- explain ---------------------------------------------------------------------

int run_explain(const RunConfig& cfg, const std::string& atom_text) {
  const auto atom = parse_ground_atom(atom_text);
  const auto facts = load_facts(cfg.facts);
  const auto program = load_program(cfg);
  Engine engine(facts, {cfg.max_derived, true});
  const auto db = engine.materialize_for(program, {atom.sig()});
  const auto tree = db.explain(atom);
  if (cfg.format == "json") {
    std::cout << to_json(tree, 2) << "\n";
  } else {
    std::cout << to_text(tree);
  }
  return kExitOk;
}

// --- bench -----------------------------------------------------------------------

struct BenchQuery {
  const char* name;
  const char* label;
  const char* text;
};

constexpr BenchQuery kBenchQueries[] = {
    {"multi_stage", "multi-stage", "?- multi_stage_attack(I, E, F, X)."},
    {"anomaly", "anomaly", "?- anomalous_process(P)."},
    {"exfiltration", "exfiltration", "?- data_exfiltration(P, F, C)."},
    {"escalation", "escalation", "?- privilege_escalation(P1, P2)."},
    {"attack_path", "attack-path", "?- attack_path(X, Y, D)."},
    {"alert", "alert", "?- generate_alert(P, M)."},
    {"policy", "policy", "?- policy_violation(P)."},
};

const BenchQuery* find_bench_query(const std::string& name) {
  for (const auto& q : kBenchQueries) {
    if (name == q.name) return &q;
  }
  return nullptr;
}

std::string grouped(std::size_t n) {
  auto digits = std::to_string(n);
  for (auto i = static_cast<std::ptrdiff_t>(digits.size()) - 3; i > 0; i -= 3) {
    digits.insert(static_cast<std::size_t>(i), ",");
  }
  return digits;
}

struct BenchArgs {
  std::vector<std::size_t> sizes{1000, 10000};
  std::vector<std::string> queries{"multi_stage", "anomaly"};
  std::size_t repeat = 5;
  std::string data;
};

int run_bench(const BenchArgs& args, const RunConfig& cfg) {
  std::vector<const BenchQuery*> queries;
  for (const auto& name : args.queries) {
    const auto* q = find_bench_query(name);
    if (q == nullptr) throw CLI::ValidationError("--queries", "unknown query '" + name + "'");
    queries.push_back(q);
  }
  const auto program = load_program(cfg);

  std::cout << "Dataset Size | Query Type | Average Execution Time (ms) | Answers\n";
  for (const auto size : args.sizes) {
    FactBase facts;
    if (args.data.empty()) {
      facts = generate(benchmark_spec(size)).facts;
    } else {
      facts = load_facts((std::filesystem::path(args.data) / ("size_" + std::to_string(size)) / "events.jsonl").string());
    }
    Engine engine(facts, {cfg.max_derived, false});
    for (const auto* q : queries) {
      const auto query = parse_query_or_throw(q->text);
      auto answers = engine.query(query, program).rows.size();  // warm-up
      double total_ms = 0;
      for (std::size_t i = 0; i < args.repeat; ++i) {
        const auto start = std::chrono::steady_clock::now();
        answers = engine.query(query, program).rows.size();
        total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
      std::cout << grouped(size) << " | " << q->label << " | " << std::fixed << std::setprecision(3)
                << total_ms / static_cast<double>(args.repeat) << " | " << answers << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"provlog: provenance-graph attack detection with stratified rules"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Generate a synthetic dataset with ground truth");
  generate_cmd->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
  generate_cmd->add_option("--nodes", gen.spec.node_count, "Number of benign entities")->capture_default_str();
  generate_cmd->add_option("--edge-factor", gen.spec.edge_factor, "Benign edges per node")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  generate_cmd->add_option("--sensitive-fraction", gen.spec.sensitive_file_fraction,
                           "Fraction of files marked sensitive")
      ->capture_default_str();
  generate_cmd->add_option("--inject", gen.inject, "Attack injection TEMPLATE[=COUNT] (repeatable)");
  generate_cmd->add_option("--anomalous", gen.anomalous, "Anomalous process READS:CONNECTS (repeatable)");
  generate_cmd->add_option("--file-threshold", gen.spec.file_threshold, "File-read threshold for labels")
      ->capture_default_str();
  generate_cmd->add_option("--net-threshold", gen.spec.net_threshold, "Connection threshold for labels")
      ->capture_default_str();
  generate_cmd->add_option("--sizes", gen.sizes, "Emit the benchmark suite for these sizes instead")
      ->delimiter(',');
  generate_cmd->add_option("--out", gen.out, "Output directory")->required();

  RunConfig ingest_cfg;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load and validate a JSONL event file");
  ingest_cmd->add_option("--facts", ingest_cfg.facts, "JSONL event file")->required();
  ingest_cmd->add_option("--out", ingest_cfg.out, "Write the normalized events here");

  RunConfig query_cfg;
  std::string query_text;
  auto* query_cmd = app.add_subcommand("query", "Answer a query such as \"?- anomalous_process(P).\"");
  add_eval_options(*query_cmd, query_cfg);
  query_cmd->add_option("--format", query_cfg.format, "text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));
  query_cmd->add_option("query", query_text, "Query text")->required();

  RunConfig detect_cfg;
  std::string truth_path;
  auto* detect_cmd = app.add_subcommand("detect", "Run the detectors; exit 3 when anything is found");
  add_eval_options(*detect_cmd, detect_cfg);
  detect_cmd->add_option("--out", detect_cfg.out, "Write the JSON report here");
  detect_cmd->add_option("--format", detect_cfg.format, "text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));
  detect_cmd->add_option("--truth", truth_path, "Score against a truth.json")->check(CLI::ExistingFile);

  RunConfig explain_cfg;
  std::string atom_text;
  auto* explain_cmd = app.add_subcommand("explain", "Print the proof tree of a derived ground atom");
  add_eval_options(*explain_cmd, explain_cfg);
  explain_cmd->add_option("--atom", atom_text, "Ground atom, e.g. \"privilege_escalation(p1, p2)\"")->required();
  explain_cmd->add_option("--format", explain_cfg.format, "text or json")
      ->capture_default_str()
      ->check(CLI::IsMember({"text", "json"}));

  BenchArgs bench;
  RunConfig bench_cfg;
  auto* bench_cmd = app.add_subcommand("bench", "Average query time per dataset size");
  bench_cmd->add_option("--sizes", bench.sizes, "Dataset sizes")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--queries", bench.queries, "Queries: multi_stage, anomaly, exfiltration, escalation, "
                                                    "attack_path, alert, policy")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--repeat", bench.repeat, "Timed runs per query")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--data", bench.data, "Suite directory with size_<n>/events.jsonl (default: generate)");
  bench_cmd->add_option("--rules", bench_cfg.rules, "Extra rule file(s)");
  bench_cmd->add_option("--max-derived", bench_cfg.max_derived, "Derived tuple limit")->capture_default_str();
  add_pack_options(*bench_cmd, bench_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*generate_cmd) return run_generate(gen);
    if (*ingest_cmd) return run_ingest(ingest_cfg);
    if (*query_cmd) return run_query(query_cfg, query_text);
    if (*detect_cmd) return run_detect(detect_cfg, truth_path);
    if (*explain_cmd) return run_explain(explain_cfg, atom_text);
    if (*bench_cmd) return run_bench(bench, bench_cfg);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Reported& r) {
    return r.status;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}
