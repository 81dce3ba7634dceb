#include "edasum/operators.hpp"

#include <algorithm>
#include <numeric>

#include "edasum/error.hpp"

namespace edasum {

std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::by_facet: return "by-facet";
    case Operator::by_superset: return "by-superset";
    case Operator::by_distrib: return "by-distrib";
    case Operator::by_neighbors: return "by-neighbors";
  }
  return "by-facet";
}

Operator parse_operator(std::string_view name) {
  if (name == "by-facet") return Operator::by_facet;
  if (name == "by-superset") return Operator::by_superset;
  if (name == "by-distrib") return Operator::by_distrib;
  if (name == "by-neighbors") return Operator::by_neighbors;
  throw ConfigError("operator", "unknown operator '" + std::string(name) + "'");
}

std::string to_string(const Action& action) {
  std::string s = std::string(to_string(action.op)) + "(" + std::to_string(action.itemset);
  if (action.attribute) s += ", a" + std::to_string(*action.attribute);
  return s + ")";
}

OperatorSet parse_operator_set(std::string_view name) {
  if (name == "all") return OperatorSet::all;
  if (name == "2op") return OperatorSet::two_op;
  throw ConfigError("operators", "unknown operator set '" + std::string(name) + "'");
}

bool allows(OperatorSet set, Operator op) {
  return set == OperatorSet::all || op == Operator::by_facet || op == Operator::by_superset;
}

ExploreResult by_facet(const PatternCatalog& catalog, ItemsetId itemset, std::uint32_t attribute,
                       std::size_t k) {
  if (attribute >= catalog.attribute_count()) {
    return ExploreResult::invalid(ExploreStatus::precondition_failed, "attribute out of range");
  }
  const auto& source = catalog.itemset(itemset);
  if (source.desc.constrains(attribute)) {
    return ExploreResult::invalid(ExploreStatus::precondition_failed,
                                  "by-facet: attribute is already fixed in the description");
  }
  const auto& data = catalog.data();
  std::vector<std::vector<ItemId>> groups(catalog.bin_count());
  for (const ItemId r : source.members) groups[data.at(r, attribute)].push_back(r);

  std::vector<ItemsetId> children;
  for (const auto& group : groups) {
    if (group.empty() || group.size() < catalog.min_support()) continue;
    if (auto child = catalog.find(catalog.closure_of(group))) {
      if (std::find(children.begin(), children.end(), *child) == children.end()) {
        children.push_back(*child);
      }
    }
  }
  if (children.empty()) {
    return ExploreResult::invalid(ExploreStatus::empty_result,
                                  "by-facet: no facet value reaches the minimum support");
  }
  if (children.size() > k) {
    std::vector<ItemsetId> ranked = children;
    std::stable_sort(ranked.begin(), ranked.end(), [&](ItemsetId a, ItemsetId b) {
      const auto sa = catalog.itemset(a).size();
      const auto sb = catalog.itemset(b).size();
      return sa != sb ? sa > sb : a < b;
    });
    ranked.resize(k);
    std::erase_if(children, [&](ItemsetId id) {
      return std::find(ranked.begin(), ranked.end(), id) == ranked.end();
    });
  }
  return {children, ExploreStatus::ok, {}};
}

ExploreResult by_superset(const PatternCatalog& catalog, ItemsetId itemset, std::size_t k) {
  if (catalog.is_root(itemset)) {
    return ExploreResult::invalid(ExploreStatus::precondition_failed,
                                  "by-superset: the root itemset has no superset");
  }
  auto sups = catalog.minimal_supersets(itemset, k);
  if (sups.empty()) {
    return ExploreResult::invalid(ExploreStatus::empty_result, "by-superset: no superset in catalog");
  }
  return {std::move(sups), ExploreStatus::ok, {}};
}

ExploreResult by_distrib(const PatternCatalog& catalog, ItemsetId itemset, std::size_t k) {
  if (catalog.size() < 2) {
    return ExploreResult::invalid(ExploreStatus::empty_result,
                                  "by-distrib: catalog holds no other itemset");
  }
  const Eigen::VectorXd dist =
      (catalog.vectors().rowwise() - catalog.vector(itemset)).cwiseAbs().rowwise().sum();
  std::vector<ItemsetId> order;
  order.reserve(catalog.size() - 1);
  for (ItemsetId id = 0; id < catalog.size(); ++id) {
    if (id != itemset) order.push_back(id);
  }
  const auto closer = [&](ItemsetId a, ItemsetId b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  };
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    closer);
  order.resize(take);
  return {std::move(order), ExploreStatus::ok, {}};
}

ExploreResult by_neighbors(const PatternCatalog& catalog, ItemsetId itemset, std::uint32_t attribute) {
  const auto& source = catalog.itemset(itemset);
  const auto bin = source.desc.value(attribute);
  if (!bin) {
    return ExploreResult::invalid(ExploreStatus::precondition_failed,
                                  "by-neighbors: attribute is not constrained in the description");
  }
  std::vector<ItemsetId> out;
  if (*bin > 0) {
    if (auto lo = catalog.closure_lookup(source.desc.with(attribute, *bin - 1))) out.push_back(*lo);
  }
  if (*bin + 1u < catalog.bin_count()) {
    if (auto hi = catalog.closure_lookup(source.desc.with(attribute, *bin + 1))) {
      if (std::find(out.begin(), out.end(), *hi) == out.end()) out.push_back(*hi);
    }
  }
  if (out.empty()) {
    return ExploreResult::invalid(ExploreStatus::empty_result,
                                  "by-neighbors: neither neighboring value reaches the minimum support");
  }
  return {std::move(out), ExploreStatus::ok, {}};
}

std::optional<std::string> precondition_failure(const PatternCatalog& catalog, const Action& action) {
  if (action.itemset >= catalog.size()) return "itemset id not in catalog";
  if (needs_attribute(action.op)) {
    if (!action.attribute) return std::string(to_string(action.op)) + ": attribute is required";
    if (*action.attribute >= catalog.attribute_count()) return "attribute out of range";
    const bool fixed = catalog.itemset(action.itemset).desc.constrains(*action.attribute);
    if (action.op == Operator::by_facet && fixed) {
      return "by-facet: attribute is already fixed in the description";
    }
    if (action.op == Operator::by_neighbors && !fixed) {
      return "by-neighbors: attribute is not constrained in the description";
    }
  } else if (action.attribute) {
    return std::string(to_string(action.op)) + ": takes no attribute";
  }
  if (action.op == Operator::by_superset && catalog.is_root(action.itemset)) {
    return "by-superset: the root itemset has no superset";
  }
  if (action.op == Operator::by_distrib && catalog.size() < 2) {
    return "by-distrib: catalog holds no other itemset";
  }
  return std::nullopt;
}

ExploreResult explore(const PatternCatalog& catalog, const Action& action, std::size_t k) {
  if (auto why = precondition_failure(catalog, action)) {
    return ExploreResult::invalid(ExploreStatus::precondition_failed, *why);
  }
  switch (action.op) {
    case Operator::by_facet: return by_facet(catalog, action.itemset, *action.attribute, k);
    case Operator::by_superset: return by_superset(catalog, action.itemset, k);
    case Operator::by_distrib: return by_distrib(catalog, action.itemset, k);
    case Operator::by_neighbors: return by_neighbors(catalog, action.itemset, *action.attribute);
  }
  return ExploreResult::invalid(ExploreStatus::precondition_failed, "unknown operator");
}

std::vector<Action> enumerate_actions(const PatternCatalog& catalog, const Summary& current,
                                      OperatorSet operators) {
  std::vector<Action> out;
  const auto attrs = static_cast<std::uint32_t>(catalog.attribute_count());
  for (const auto id : current) {
    for (std::size_t o = 0; o < kOperatorCount; ++o) {
      const auto op = static_cast<Operator>(o);
      if (!allows(operators, op)) continue;
      if (needs_attribute(op)) {
        for (std::uint32_t a = 0; a < attrs; ++a) {
          Action act{id, op, a};
          if (!precondition_failure(catalog, act)) out.push_back(act);
        }
      } else {
        Action act{id, op, std::nullopt};
        if (!precondition_failure(catalog, act)) out.push_back(act);
      }
    }
  }
  return out;
}

}  // namespace edasum
