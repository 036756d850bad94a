#include "provlog/symbol_table.hpp"

namespace provlog {

SymbolTable::SymbolTable(const SymbolTable& other) {
  for (const auto& s : other.strings_) intern(s);
}

SymbolTable& SymbolTable::operator=(const SymbolTable& other) {
  if (this != &other) {
    strings_.clear();
    ids_.clear();
    for (const auto& s : other.strings_) intern(s);
  }
  return *this;
}

std::uint32_t SymbolTable::intern(std::string_view text) {
  if (auto it = ids_.find(text); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(strings_.size());
  const std::string& stored = strings_.emplace_back(text);
  ids_.emplace(std::string_view(stored), id);
  return id;
}

std::optional<std::uint32_t> SymbolTable::find(std::string_view text) const {
  if (auto it = ids_.find(text); it != ids_.end()) return it->second;
  return std::nullopt;
}

}  // namespace provlog
