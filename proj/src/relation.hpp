#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace provlog::detail {

/// Tagged 64-bit value: low bit 1 = 63-bit signed integer, 0 = symbol id.
struct Value {
  std::uint64_t raw = 0;

  static Value symbol(std::uint32_t id) { return {std::uint64_t{id} << 1}; }
  static Value integer(std::int64_t v) { return {(static_cast<std::uint64_t>(v) << 1) | 1U}; }

  bool is_int() const { return (raw & 1U) != 0; }
  std::int64_t as_int() const { return static_cast<std::int64_t>(raw) >> 1; }
  std::uint32_t symbol_id() const { return static_cast<std::uint32_t>(raw >> 1); }

  bool operator==(const Value&) const = default;
};

inline std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline constexpr std::uint32_t kNoRow = UINT32_MAX;
inline constexpr std::uint32_t kBaseFact = UINT32_MAX;

/// Reference to one stored tuple: relation id within a workspace, row number.
struct TupleRef {
  std::uint32_t rel = 0;
  std::uint32_t row = 0;
};

/// Bucketed hash index over the columns selected by a bit mask. Bucket rows
/// are ascending, which lets scans stop at a row limit.
struct ColumnIndex {
  std::uint32_t mask = 0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets;
};

/// Append-only set of fixed-arity tuples with lazily built column indexes and
/// optional per-row derivation witnesses.
class Relation {
 public:
  explicit Relation(std::size_t arity) : arity_(arity) {}

  std::size_t arity() const noexcept { return arity_; }
  std::uint32_t size() const noexcept { return count_; }
  const Value* row(std::uint32_t r) const { return data_.data() + std::size_t{r} * arity_; }

  std::uint32_t find(const Value* values) const;

  /// Appends the tuple unless present. Returns the new row or kNoRow.
  std::uint32_t insert(const Value* values);

  /// Index on `mask`, built on first use and maintained by later inserts.
  const ColumnIndex& index(std::uint32_t mask);

  static std::uint64_t key_hash(std::uint32_t mask, const Value* values, std::size_t arity);

  void set_witness(std::uint32_t row, std::uint32_t rule, std::span<const TupleRef> refs);
  std::uint32_t witness_rule(std::uint32_t row) const {
    return row < wrule_.size() ? wrule_[row] : kBaseFact;
  }
  std::span<const TupleRef> witness_refs(std::uint32_t row) const;

 private:
  std::uint64_t row_hash(const Value* values) const;
  bool row_equals(std::uint32_t r, const Value* values) const;
  void grow();
  void add_to_index(ColumnIndex& idx, std::uint32_t r);

  std::size_t arity_;
  std::uint32_t count_ = 0;
  std::vector<Value> data_;
  std::vector<std::uint32_t> slots_;  // open addressing over row ids
  std::vector<std::unique_ptr<ColumnIndex>> indexes_;

  std::vector<std::uint32_t> wrule_;
  std::vector<std::uint32_t> woff_;
  std::vector<TupleRef> wrefs_;
};

}  // namespace provlog::detail
