#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "provlog/rule_ast.hpp"

namespace provlog::detail {

using VarSet = std::set<std::string>;

void add_vars(const Term& t, VarSet& out);
void add_vars(const Atom& a, VarSet& out);
void add_vars(const Expr& e, VarSet& out);

/// Variables of a count literal's pattern that also occur elsewhere in the
/// rule; they group the count. The remaining pattern variables are local.
VarSet count_outer_vars(const CountLit& c, const std::optional<Atom>& head, const std::vector<Literal>& body);

/// Variables a literal binds once evaluated.
VarSet bound_by(const Literal& lit);

/// Sideways-information-passing order for a rule body. Negations,
/// comparisons, assignments and counts are placed as soon as their inputs
/// are bound; among positive literals the one with the most bound variables
/// wins, then the smaller estimate from `size_of` (rows matching the
/// literal's constants), then the one with more constants, then source
/// order. `first`, when set, names a positive literal forced to the front
/// (the delta literal of a semi-naive variant).
std::vector<std::size_t> order_body(const std::optional<Atom>& head, const std::vector<Literal>& body,
                                    VarSet bound, std::optional<std::size_t> first = std::nullopt,
                                    const std::function<std::size_t(const Atom&)>& size_of = {});

}  // namespace provlog::detail
