#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edasum/metrics.hpp"
#include "edasum/pattern.hpp"

namespace edasum {

// Enumeration order is significant: it is the candidate order planners scan.
enum class Operator : std::uint8_t { by_facet = 0, by_superset = 1, by_distrib = 2, by_neighbors = 3 };
inline constexpr std::size_t kOperatorCount = 4;

std::string_view to_string(Operator op);
Operator parse_operator(std::string_view name);
constexpr bool needs_attribute(Operator op) {
  return op == Operator::by_facet || op == Operator::by_neighbors;
}

struct Action {
  ItemsetId itemset = 0;
  Operator op = Operator::by_facet;
  std::optional<std::uint32_t> attribute;
  friend bool operator==(const Action&, const Action&) = default;
};

std::string to_string(const Action& action);

// `two_op` restricts exploration to drill-down and roll-up.
enum class OperatorSet { all, two_op };
OperatorSet parse_operator_set(std::string_view name);
bool allows(OperatorSet set, Operator op);

enum class ExploreStatus { ok, precondition_failed, empty_result };

// Outcome of applying an operator. A non-ok status marks an invalid action,
// which planners skip; it is not an exceptional condition.
struct ExploreResult {
  Summary summary;
  ExploreStatus status = ExploreStatus::ok;
  std::string reason;

  bool valid() const { return status == ExploreStatus::ok; }
  static ExploreResult invalid(ExploreStatus status, std::string reason) {
    return {{}, status, std::move(reason)};
  }
};

ExploreResult by_facet(const PatternCatalog& catalog, ItemsetId itemset, std::uint32_t attribute,
                       std::size_t k);
ExploreResult by_superset(const PatternCatalog& catalog, ItemsetId itemset, std::size_t k);
ExploreResult by_distrib(const PatternCatalog& catalog, ItemsetId itemset, std::size_t k);
ExploreResult by_neighbors(const PatternCatalog& catalog, ItemsetId itemset, std::uint32_t attribute);

ExploreResult explore(const PatternCatalog& catalog, const Action& action, std::size_t k);

// Structural preconditions only (attribute presence, root). An action that
// passes may still yield an empty result.
std::optional<std::string> precondition_failure(const PatternCatalog& catalog, const Action& action);

// Every (summary itemset, operator, attribute) combination meeting the
// structural preconditions, ordered by summary position, operator, attribute.
std::vector<Action> enumerate_actions(const PatternCatalog& catalog, const Summary& current,
                                      OperatorSet operators = OperatorSet::all);

}  // namespace edasum
