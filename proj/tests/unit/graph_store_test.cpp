#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "provlog/error.hpp"
#include "provlog/graph_store.hpp"

namespace provlog {
namespace {

EdgeFilter filter(std::optional<EntityId> from, std::optional<EntityId> to = std::nullopt,
                  std::optional<EdgeType> etype = std::nullopt) {
  EdgeFilter f;
  f.from = from;
  f.to = to;
  f.etype = etype;
  return f;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::Io;
}

// --- intern ----------------------------------------------------------------------

TEST(Intern, FirstLabelGetsIndexZero) {
  FactBase fb;
  EXPECT_EQ(fb.intern("p1").index, 0U);
}

TEST(Intern, SameLabelSameId) {
  FactBase fb;
  const auto a = fb.intern("p1");
  const auto b = fb.intern("p1");
  EXPECT_EQ(a, b);
  EXPECT_EQ(fb.interned_count(), 1U);
}

TEST(Intern, IndexesAreDense) {
  FactBase fb;
  EXPECT_EQ(fb.intern("p1").index, 0U);
  EXPECT_EQ(fb.intern("f1").index, 1U);
  EXPECT_EQ(fb.label(EntityId{1}), "f1");
}

TEST(Intern, FindDoesNotIntern) {
  FactBase fb;
  EXPECT_FALSE(fb.find("nope"));
  EXPECT_EQ(fb.interned_count(), 0U);
  fb.intern("x");
  EXPECT_EQ(fb.find("x")->index, 0U);
}

TEST(Intern, BijectiveUnderManyRandomLabelsWithDuplicates) {
  std::mt19937_64 rng(7);
  FactBase fb;
  std::map<std::string, EntityId> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto label = "n" + std::to_string(rng() % 3000);
    const auto id = fb.intern(label);
    const auto [it, fresh] = seen.emplace(label, id);
    if (fresh) {
      EXPECT_EQ(id.index, seen.size() - 1) << "new labels take the next dense index";
    } else {
      EXPECT_EQ(it->second, id);
    }
  }
  ASSERT_EQ(fb.interned_count(), seen.size());
  std::set<std::uint32_t> indexes;
  for (const auto& [label, id] : seen) {
    EXPECT_EQ(fb.label(id), label);
    indexes.insert(id.index);
  }
  EXPECT_EQ(indexes.size(), seen.size());
  EXPECT_EQ(*indexes.rbegin(), seen.size() - 1);
}

// --- add_node --------------------------------------------------------------------

TEST(AddNode, RegistersKind) {
  FactBase fb;
  const auto p1 = fb.intern("p1");
  fb.add_node(p1, NodeKind::Process);
  EXPECT_EQ(fb.node_kind(p1), NodeKind::Process);
  EXPECT_EQ(fb.node_count(), 1U);
}

TEST(AddNode, ReRegisteringSameKindIsNoOp) {
  FactBase fb;
  const auto p1 = fb.intern("p1");
  fb.add_node(p1, NodeKind::Process);
  fb.add_node(p1, NodeKind::Process);
  EXPECT_EQ(fb.node_count(), 1U);
  EXPECT_EQ(fb.nodes_of_kind(NodeKind::Process).size(), 1U);
}

TEST(AddNode, DifferentKindIsKindConflict) {
  FactBase fb;
  const auto p1 = fb.intern("p1");
  fb.add_node(p1, NodeKind::Process);
  EXPECT_EQ(code_of([&] { fb.add_node(p1, NodeKind::File); }), ErrorCode::KindConflict);
  EXPECT_EQ(fb.node_kind(p1), NodeKind::Process);
}

TEST(AddNode, UnregisteredHasNoKind) {
  FactBase fb;
  const auto x = fb.intern("x");
  EXPECT_FALSE(fb.node_kind(x));
  EXPECT_FALSE(fb.is_registered(x));
}

TEST(NodeKind, NamesRoundTrip) {
  for (const auto kind : kAllNodeKinds) EXPECT_EQ(parse_kind(kind_name(kind)), kind);
  EXPECT_EQ(kind_name(NodeKind::NetworkConnection), "network_connection");
  EXPECT_FALSE(parse_kind("socket"));
}

// --- add_edge --------------------------------------------------------------------

class EdgeStore : public ::testing::Test {
 protected:
  void SetUp() override {
    p1 = node("p1", NodeKind::Process);
    f1 = node("f1", NodeKind::File);
    c1 = node("c1", NodeKind::NetworkConnection);
  }

  EntityId node(std::string_view label, NodeKind kind) {
    const auto id = fb.intern(label);
    fb.add_node(id, kind);
    return id;
  }

  FactBase fb;
  EntityId p1, f1, c1;
};

TEST_F(EdgeStore, AddedEdgeIsVisibleFromSource) {
  fb.add_edge(p1, f1, "read", 100);
  const auto edges = fb.edges_matching(filter(p1));
  ASSERT_EQ(edges.size(), 1U);
  EXPECT_EQ(edges[0].to, f1);
  EXPECT_EQ(fb.edge_type_name(edges[0].etype), "read");
  EXPECT_EQ(edges[0].ts, 100U);
}

TEST_F(EdgeStore, DuplicateEdgesCollapse) {
  EXPECT_TRUE(fb.add_edge(p1, f1, "read", 100));
  EXPECT_FALSE(fb.add_edge(p1, f1, "read", 100));
  EXPECT_EQ(fb.edge_count(), 1U);
  EXPECT_EQ(fb.edges_matching(filter(std::nullopt, f1)).size(), 1U);
}

TEST_F(EdgeStore, SameEndpointsDifferentTimeAreDistinct) {
  fb.add_edge(p1, f1, "read", 1);
  fb.add_edge(p1, f1, "read", 2);
  EXPECT_EQ(fb.edge_count(), 2U);
}

TEST_F(EdgeStore, UnregisteredEndpointIsUnknownEntity) {
  const auto f9 = fb.intern("f9");
  EXPECT_EQ(code_of([&] { fb.add_edge(p1, f9, "read", 5); }), ErrorCode::UnknownEntity);
  EXPECT_EQ(code_of([&] { fb.add_edge(f9, p1, "read", 5); }), ErrorCode::UnknownEntity);
  EXPECT_EQ(fb.edge_count(), 0U);
}

TEST_F(EdgeStore, SelfLoopsAndCyclesAreAccepted) {
  fb.add_edge(p1, p1, "signal", 1);
  fb.add_edge(p1, f1, "write", 2);
  fb.add_edge(f1, p1, "read", 3);
  EXPECT_EQ(fb.edge_count(), 3U);
}

// --- edges_matching --------------------------------------------------------------

TEST(EdgesMatching, EmptyStoreReturnsNothing) {
  FactBase fb;
  EXPECT_TRUE(fb.edges_matching({}).empty());
  EXPECT_TRUE(fb.edges_matching(filter(EntityId{0})).empty());
}

TEST_F(EdgeStore, FilterByType) {
  fb.add_edge(p1, f1, "read", 1);
  fb.add_edge(p1, c1, "connect", 2);
  const auto read = fb.find_edge_type("read");
  ASSERT_TRUE(read);
  const auto edges = fb.edges_matching(filter(std::nullopt, std::nullopt, *read));
  ASSERT_EQ(edges.size(), 1U);
  EXPECT_EQ(edges[0].to, f1);
}

TEST_F(EdgeStore, FilterBySourceAndType) {
  fb.add_edge(p1, f1, "read", 1);
  fb.add_edge(p1, c1, "connect", 2);
  const auto edges = fb.edges_matching(filter(p1, std::nullopt, *fb.find_edge_type("connect")));
  ASSERT_EQ(edges.size(), 1U);
  EXPECT_EQ(edges[0], (EdgeFact{p1, c1, *fb.find_edge_type("connect"), 2}));
}

TEST_F(EdgeStore, ResultsAreSortedByFromTypeTimeTo) {
  fb.add_edge(p1, f1, "write", 9);
  fb.add_edge(p1, c1, "read", 5);
  fb.add_edge(p1, f1, "read", 5);
  fb.add_edge(p1, f1, "read", 1);
  const auto edges = fb.edges_matching({});
  EXPECT_TRUE(std::is_sorted(edges.begin(), edges.end(), [](const EdgeFact& a, const EdgeFact& b) {
    return std::tie(a.from, a.etype, a.ts, a.to) < std::tie(b.from, b.etype, b.ts, b.to);
  }));
  EXPECT_EQ(edges.size(), 4U);
}

TEST(EdgesMatching, IndexesAgreeWithLinearScanOnRandomStores) {
  std::mt19937_64 rng(2024);
  static const char* kOps[] = {"read", "write", "connect", "fork", "send_data"};
  for (int store = 0; store < 10; ++store) {
    FactBase fb;
    std::vector<EntityId> ids;
    for (int i = 0; i < 40; ++i) {
      ids.push_back(fb.intern("n" + std::to_string(i)));
      fb.add_node(ids.back(), kAllNodeKinds[rng() % 5]);
    }
    const auto m = rng() % 1001;
    for (std::size_t i = 0; i < m; ++i) fb.add_edge(ids[rng() % 40], ids[rng() % 40], kOps[rng() % 5], rng() % 50);

    for (int q = 0; q < 10; ++q) {  // 100 filter combinations overall
      EdgeFilter f;
      if (rng() % 2) f.from = ids[rng() % 40];
      if (rng() % 2) f.to = ids[rng() % 40];
      if (rng() % 2) f.etype = fb.edge_type(kOps[rng() % 5]);
      std::vector<EdgeFact> scan;
      for (const auto& e : fb.edges()) {
        if ((!f.from || e.from == *f.from) && (!f.to || e.to == *f.to) && (!f.etype || e.etype == *f.etype)) {
          scan.push_back(e);
        }
      }
      auto got = fb.edges_matching(f);
      std::sort(scan.begin(), scan.end());
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, scan);
    }
  }
}

// --- assert_attribute ------------------------------------------------------------

TEST_F(EdgeStore, SensitiveFileRelation) {
  fb.assert_attribute("sensitive_file", {f1});
  EXPECT_EQ(fb.attribute("sensitive_file"), (std::set<AttrTuple>{{f1}}));
}

TEST_F(EdgeStore, ProcessPrivilegeReadsBack) {
  fb.assert_attribute("process_privilege", {p1, std::int64_t{1}});
  std::size_t hits = 0;
  for (const auto& t : fb.attribute("process_privilege")) {
    hits += t == AttrTuple{p1, std::int64_t{1}} ? 1 : 0;
  }
  EXPECT_EQ(hits, 1U);
}

TEST_F(EdgeStore, AttributeArityMismatch) {
  EXPECT_EQ(code_of([&] { fb.assert_attribute("sensitive_file", {f1, p1}); }), ErrorCode::ArityMismatch);
}

TEST_F(EdgeStore, AttributeUnknownEntity) {
  const auto ghost = fb.intern("ghost");
  EXPECT_EQ(code_of([&] { fb.assert_attribute("sensitive_file", {ghost}); }), ErrorCode::UnknownEntity);
}

TEST_F(EdgeStore, AttributeUnknownPredicate) {
  EXPECT_EQ(code_of([&] { fb.assert_attribute("favourite_colour", {p1}); }), ErrorCode::UnknownPredicate);
}

TEST_F(EdgeStore, AttributeTypeMismatch) {
  EXPECT_EQ(code_of([&] { fb.assert_attribute("process_privilege", {p1, std::string("high")}); }),
            ErrorCode::TypeMismatch);
}

TEST_F(EdgeStore, DuplicateAttributesCollapse) {
  EXPECT_TRUE(fb.assert_attribute("threshold", {std::int64_t{20}, std::int64_t{10}}));
  EXPECT_FALSE(fb.assert_attribute("threshold", {std::int64_t{20}, std::int64_t{10}}));
  EXPECT_EQ(fb.attribute_count(), 1U);
}

TEST(Metadata, SchemaHasDeclaredArities) {
  EXPECT_EQ(find_metadata_predicate("threshold")->args.size(), 2U);
  EXPECT_EQ(find_metadata_predicate("sensitive_file")->args.size(), 1U);
  EXPECT_EQ(find_metadata_predicate("process_privilege")->args.size(), 2U);
  EXPECT_EQ(find_metadata_predicate("nope"), nullptr);
}

}  // namespace
}  // namespace provlog
