#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "provlog/graph_store.hpp"

namespace provlog {

/// Reads the JSONL event format: one `node`, `edge` or `attr` record per line.
/// Edge records may carry optional `from_kind` / `to_kind` fields, which
/// register unknown endpoints on the fly. Errors are `ParseError`s that name
/// the offending line.
FactBase load_events(std::istream& in);
FactBase load_events_file(const std::string& path);

/// Writes every fact in a deterministic order: nodes by label, edges by
/// (from, type, ts, to) label text, attributes by predicate then arguments.
void export_events(const FactBase& facts, std::ostream& out);
std::string export_events(const FactBase& facts);

}  // namespace provlog
