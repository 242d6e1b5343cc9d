#include <algorithm>
#include <set>

#include "ocrlab/error.h"
#include "ocrlab/feasibility.h"

namespace ocrlab {

NestedPhaseOracle::NestedPhaseOracle(NestedPhaseParams params)
    : params_(std::move(params)) {
  const NestedPhaseParams& p = params_;
  n_ = static_cast<int>(p.a.size() + p.b.size() + p.c.size());
  if (p.b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "nested construction needs B");
  }
  if (static_cast<int>(p.a.size()) > kMaxAClass) {
    throw Error(ErrorCode::kTooLarge,
                "|A| = " + std::to_string(p.a.size()) + " exceeds " +
                    std::to_string(kMaxAClass));
  }
  class_.assign(n_, Class::kA);
  index_.assign(n_, -1);
  auto assign = [&](const std::vector<ElementId>& ids, Class cls) {
    for (size_t i = 0; i < ids.size(); ++i) {
      const ElementId e = ids[i];
      if (e < 0 || e >= n_ || index_[e] != -1) {
        throw Error(ErrorCode::kInvalidArgument,
                    "A, B, C must partition [0, n)");
      }
      class_[e] = cls;
      index_[e] = static_cast<int>(i);
    }
  };
  assign(p.a, Class::kA);
  assign(p.b, Class::kB);
  assign(p.c, Class::kC);

  if (p.v.empty() || p.v.size() != p.u.size() || p.v.size() != p.f.size()) {
    throw Error(ErrorCode::kInvalidArgument, "V, U, f must have equal length");
  }
  const size_t m = p.v.size();
  v_masks_.resize(m);
  f_pos_.resize(m);
  for (size_t i = 0; i < m; ++i) {
    uint32_t mask = 0;
    for (ElementId e : p.v[i]) {
      if (e < 0 || e >= n_ || class_[e] != Class::kA) {
        throw Error(ErrorCode::kInvalidArgument, "V set contains a non-A element");
      }
      mask |= uint32_t{1} << index_[e];
    }
    v_masks_[i] = mask;
    if (!v_lookup_.emplace(mask, static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument, "V sets must be distinct");
    }
    std::set<int> u_pos;
    for (ElementId e : p.u[i]) {
      if (e < 0 || e >= n_ || class_[e] != Class::kC) {
        throw Error(ErrorCode::kInvalidArgument, "U set contains a non-C element");
      }
      u_pos.insert(index_[e]);
    }
    if (p.f[i].size() != p.b.size()) {
      throw Error(ErrorCode::kInvalidArgument, "f_i must be defined on all of B");
    }
    std::set<std::vector<int>> images;
    f_pos_[i].resize(p.b.size());
    for (size_t j = 0; j < p.b.size(); ++j) {
      std::vector<int> pos;
      for (ElementId e : p.f[i][j]) {
        if (e < 0 || e >= n_ || class_[e] != Class::kC ||
            !u_pos.contains(index_[e])) {
          throw Error(ErrorCode::kInvalidArgument, "f(i, j) must lie in U_i");
        }
        pos.push_back(index_[e]);
      }
      std::sort(pos.begin(), pos.end());
      if (!images.insert(pos).second) {
        throw Error(ErrorCode::kInvalidArgument, "f_i must be injective");
      }
      f_pos_[i][j] = std::move(pos);
    }
  }
}

std::optional<int> NestedPhaseOracle::IndexOfV(uint32_t a_mask) const {
  auto it = v_lookup_.find(a_mask);
  if (it == v_lookup_.end()) return std::nullopt;
  return it->second;
}

bool NestedPhaseOracle::InF(int i, int j, int c_pos) const {
  const auto& f = f_pos_[i][j];
  return std::binary_search(f.begin(), f.end(), c_pos);
}

bool NestedPhaseOracle::CanExtendImpl(const DecisionState& state,
                                      std::optional<Pin> pin) const {
  uint32_t sel_a = 0;
  uint32_t dis_a = 0;
  std::vector<int> sel_b;
  std::vector<int> sel_c;
  std::vector<char> dis_b(params_.b.size(), 0);
  std::vector<char> dis_c(params_.c.size(), 0);
  auto note = [&](ElementId e, bool in) {
    const int idx = index_[e];
    switch (class_[e]) {
      case Class::kA:
        (in ? sel_a : dis_a) |= uint32_t{1} << idx;
        break;
      case Class::kB:
        if (in) {
          sel_b.push_back(idx);
        } else {
          dis_b[idx] = 1;
        }
        break;
      case Class::kC:
        if (in) {
          sel_c.push_back(idx);
        } else {
          dis_c[idx] = 1;
        }
        break;
    }
  };
  for (ElementId e : state.selected()) note(e, true);
  for (ElementId e : state.discarded()) note(e, false);
  if (pin) note(pin->element, pin->in);
  if (sel_b.size() > 1) return false;

  auto j_works = [&](int i, int j) {
    const auto& f = f_pos_[i][j];
    for (int c : sel_c) {
      if (!std::binary_search(f.begin(), f.end(), c)) return false;
    }
    for (int c : f) {
      if (dis_c[c]) return false;
    }
    return true;
  };
  auto i_works = [&](int i) {
    if (!sel_b.empty()) return j_works(i, sel_b[0]);
    for (int j = 0; j < static_cast<int>(params_.b.size()); ++j) {
      if (!dis_b[j] && j_works(i, j)) return true;
    }
    return false;
  };

  const uint32_t all_a =
      params_.a.empty() ? 0 : (uint32_t{1} << params_.a.size()) - 1;
  if ((sel_a | dis_a) == all_a) {
    // A fully decided: at most one candidate index.
    const auto i = IndexOfV(sel_a);
    return i.has_value() && i_works(*i);
  }
  for (int i = 0; i < num_indices(); ++i) {
    const uint32_t v = v_masks_[i];
    if ((v & sel_a) == sel_a && (v & dis_a) == 0 && i_works(i)) return true;
  }
  return false;
}

bool NestedPhaseOracle::Contains(std::span<const ElementId> set) const {
  for (ElementId e : set) CheckElement(e);
  uint32_t a_mask = 0;
  std::vector<int> bs;
  std::vector<int> cs;
  for (ElementId e : set) {
    switch (class_[e]) {
      case Class::kA: a_mask |= uint32_t{1} << index_[e]; break;
      case Class::kB: bs.push_back(index_[e]); break;
      case Class::kC: cs.push_back(index_[e]); break;
    }
  }
  const auto i = IndexOfV(a_mask);
  if (!i || bs.size() != 1) return false;
  std::sort(cs.begin(), cs.end());
  return cs == f_pos_[*i][bs[0]];
}

double NestedPhaseOracle::MaxWeight(std::span<const double> values) const {
  double best = -1.0;
  for (int i = 0; i < num_indices(); ++i) {
    double base = 0.0;
    for (ElementId e : params_.v[i]) base += values[e];
    for (size_t j = 0; j < params_.b.size(); ++j) {
      double s = base + values[params_.b[j]];
      for (int c : f_pos_[i][j]) s += values[params_.c[c]];
      best = std::max(best, s);
    }
  }
  return best;
}

nlohmann::json NestedPhaseOracle::ParamsJson() const {
  return {{"A", params_.a}, {"B", params_.b}, {"C", params_.c},
          {"V", params_.v}, {"U", params_.u}, {"f", params_.f}};
}

}  // namespace ocrlab
