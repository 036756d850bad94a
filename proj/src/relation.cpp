#include "relation.hpp"

namespace provlog::detail {

std::uint64_t Relation::row_hash(const Value* values) const {
  std::uint64_t h = 0x51ed270b27a4c0e1ULL + arity_;
  for (std::size_t i = 0; i < arity_; ++i) h = mix(h ^ values[i].raw) + i;
  return h;
}

std::uint64_t Relation::key_hash(std::uint32_t mask, const Value* values, std::size_t arity) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL ^ mask;
  for (std::size_t i = 0; i < arity; ++i) {
    if (mask & (1U << i)) h = mix(h ^ values[i].raw) + i;
  }
  return h;
}

bool Relation::row_equals(std::uint32_t r, const Value* values) const {
  const Value* stored = row(r);
  for (std::size_t i = 0; i < arity_; ++i) {
    if (stored[i] != values[i]) return false;
  }
  return true;
}

std::uint32_t Relation::find(const Value* values) const {
  if (slots_.empty()) return kNoRow;
  const std::size_t m = slots_.size() - 1;
  for (std::size_t s = row_hash(values) & m;; s = (s + 1) & m) {
    const auto r = slots_[s];
    if (r == kNoRow) return kNoRow;
    if (row_equals(r, values)) return r;
  }
}

void Relation::grow() {
  const std::size_t cap = slots_.empty() ? 16 : slots_.size() * 2;
  slots_.assign(cap, kNoRow);
  const std::size_t m = cap - 1;
  for (std::uint32_t r = 0; r < count_; ++r) {
    std::size_t s = row_hash(row(r)) & m;
    while (slots_[s] != kNoRow) s = (s + 1) & m;
    slots_[s] = r;
  }
}

std::uint32_t Relation::insert(const Value* values) {
  if ((std::size_t{count_} + 1) * 2 > slots_.size()) grow();
  const std::size_t m = slots_.size() - 1;
  std::size_t s = row_hash(values) & m;
  for (;; s = (s + 1) & m) {
    const auto r = slots_[s];
    if (r == kNoRow) break;
    if (row_equals(r, values)) return kNoRow;
  }
  const auto r = count_++;
  data_.insert(data_.end(), values, values + arity_);
  slots_[s] = r;
  for (auto& idx : indexes_) add_to_index(*idx, r);
  return r;
}

void Relation::add_to_index(ColumnIndex& idx, std::uint32_t r) {
  idx.buckets[key_hash(idx.mask, row(r), arity_)].push_back(r);
}

const ColumnIndex& Relation::index(std::uint32_t mask) {
  for (const auto& idx : indexes_) {
    if (idx->mask == mask) return *idx;
  }
  auto idx = std::make_unique<ColumnIndex>();
  idx->mask = mask;
  for (std::uint32_t r = 0; r < count_; ++r) add_to_index(*idx, r);
  indexes_.push_back(std::move(idx));
  return *indexes_.back();
}

void Relation::set_witness(std::uint32_t row, std::uint32_t rule, std::span<const TupleRef> refs) {
  if (wrule_.size() <= row) {
    wrule_.resize(row + 1, kBaseFact);
    woff_.resize(row + 2, static_cast<std::uint32_t>(wrefs_.size()));
  }
  // Witnesses are written in row order, so refs for `row` go at the end.
  wrule_[row] = rule;
  woff_[row] = static_cast<std::uint32_t>(wrefs_.size());
  wrefs_.insert(wrefs_.end(), refs.begin(), refs.end());
  woff_[row + 1] = static_cast<std::uint32_t>(wrefs_.size());
}

std::span<const TupleRef> Relation::witness_refs(std::uint32_t row) const {
  if (row >= wrule_.size() || wrule_[row] == kBaseFact) return {};
  return {wrefs_.data() + woff_[row], wrefs_.data() + woff_[row + 1]};
}

}  // namespace provlog::detail
