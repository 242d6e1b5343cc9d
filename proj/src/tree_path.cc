#include <algorithm>
#include <map>

#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {

TreePathOracle::TreePathOracle(int k, std::vector<std::vector<int>> strings)
    : k_(k), n_(static_cast<int>(strings.size())), strings_(std::move(strings)) {
  if (k < 2 || k % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "tree needs an even k >= 2");
  }
  // Exactly k^i strings of each length i in 1..k.
  std::vector<int64_t> per_layer(k + 1, 0);
  std::map<std::vector<int>, ElementId> by_string;
  for (ElementId e = 0; e < n_; ++e) {
    const auto& s = strings_[e];
    if (s.empty() || static_cast<int>(s.size()) > k) {
      throw Error(ErrorCode::kInvalidArgument, "tree string length out of range");
    }
    for (int ch : s) {
      if (ch < 1 || ch > k) {
        throw Error(ErrorCode::kInvalidArgument, "tree character out of [1,k]");
      }
    }
    if (!by_string.emplace(s, e).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate tree string");
    }
    ++per_layer[s.size()];
  }
  int64_t expect = 1;
  for (int i = 1; i <= k; ++i) {
    expect *= k;
    if (per_layer[i] != expect) {
      throw Error(ErrorCode::kInvalidArgument,
                  "layer " + std::to_string(i) + " has " +
                      std::to_string(per_layer[i]) + " strings, expected " +
                      std::to_string(expect));
    }
  }

  parent_.assign(n_, -1);
  depth_.assign(n_, 0);
  last_char_.assign(n_, 0);
  children_.assign(n_, {});
  for (ElementId e = 0; e < n_; ++e) {
    const auto& s = strings_[e];
    depth_[e] = static_cast<int>(s.size());
    last_char_[e] = s.back();
    if (s.size() > 1) {
      parent_[e] = by_string.at(std::vector<int>(s.begin(), s.end() - 1));
    }
  }
  // Children in character order: iterate the string map, which is
  // lexicographic, so siblings are appended by increasing last character.
  for (const auto& [s, e] : by_string) {
    if (parent_[e] == -1) {
      root_children_.push_back(e);
    } else {
      children_[parent_[e]].push_back(e);
    }
  }
}

TreePathOracle TreePathOracle::Canonical(int k) {
  if (k < 2 || k % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "tree needs an even k >= 2");
  }
  std::vector<std::vector<int>> strings;
  std::vector<std::vector<int>> layer = {{}};
  for (int depth = 1; depth <= k; ++depth) {
    std::vector<std::vector<int>> next;
    next.reserve(layer.size() * k);
    for (const auto& s : layer) {
      for (int ch = 1; ch <= k; ++ch) {
        auto t = s;
        t.push_back(ch);
        next.push_back(std::move(t));
      }
    }
    strings.insert(strings.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return TreePathOracle(k, std::move(strings));
}

std::span<const ElementId> TreePathOracle::children(ElementId e) const {
  if (e == -1) return root_children_;
  return children_[e];
}

bool TreePathOracle::IsPrefix(ElementId a, ElementId b) const {
  while (depth_[b] > depth_[a]) b = parent_[b];
  return a == b;
}

bool TreePathOracle::CanExtendImpl(const DecisionState& state,
                                   std::optional<Pin> pin) const {
  // Downward-closed, so the selected set (plus a pinned-in element) must
  // itself be a chain under the prefix order.
  ElementId deepest = -1;
  auto add = [&](ElementId e) {
    if (deepest == -1) {
      deepest = e;
      return true;
    }
    if (depth_[e] > depth_[deepest]) {
      if (!IsPrefix(deepest, e)) return false;
      deepest = e;
      return true;
    }
    return IsPrefix(e, deepest);
  };
  for (ElementId e : state.selected()) {
    if (!add(e)) return false;
  }
  if (pin && pin->in && !add(pin->element)) return false;
  return true;
}

bool TreePathOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  for (size_t i = 0; i < set.size(); ++i) {
    for (size_t j = i + 1; j < set.size(); ++j) {
      if (set[i] == set[j] || !Comparable(set[i], set[j])) return false;
    }
  }
  return true;
}

double TreePathOracle::MaxWeight(std::span<const double> values) const {
  // Best root-to-node path; strings of a parent precede its children in
  // depth order, so process elements by depth.
  std::vector<ElementId> by_depth(n_);
  for (ElementId e = 0; e < n_; ++e) by_depth[e] = e;
  std::stable_sort(by_depth.begin(), by_depth.end(),
                   [&](ElementId x, ElementId y) { return depth_[x] < depth_[y]; });
  std::vector<double> path(n_, 0.0);
  double best = 0.0;
  for (ElementId e : by_depth) {
    path[e] = std::max(values[e], 0.0) + (parent_[e] == -1 ? 0.0 : path[parent_[e]]);
    best = std::max(best, path[e]);
  }
  return best;
}

nlohmann::json TreePathOracle::ParamsJson() const {
  return {{"k", k_}, {"strings", strings_}};
}

}  // namespace ocrlab
