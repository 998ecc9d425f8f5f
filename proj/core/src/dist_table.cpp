#include <cmath>

#include "causalaug/dist_table.hpp"
#include "causalaug/error.hpp"

namespace causalaug {

std::size_t DistTable::size() const {
  std::size_t s = 1;
  for (int c : cards) s *= static_cast<std::size_t>(c);
  return s;
}

int DistTable::card_of(const std::string& var) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i] == var) return cards[i];
  throw ValidationError("DistTable: unknown variable " + var);
}

void DistTable::validate(double tol) const {
  if (vars.size() != cards.size()) throw ValidationError("DistTable: vars/cards mismatch");
  for (int c : cards)
    if (c <= 0) throw ValidationError("DistTable: non-positive cardinality");
  if (p.size() != size()) throw ValidationError("DistTable: wrong cell count");
  double m = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ValidationError("DistTable: negative or NaN cell");
    m += v;
  }
  if (std::abs(m - 1.0) > tol)
    throw ValidationError("DistTable: mass " + std::to_string(m) + " not within tolerance of 1");
}

double total_mass(const DistTable& t) {
  double m = 0.0;
  for (double v : t.p) m += v;
  return m;
}

std::size_t encode_index(const std::vector<int>& cards, const int* values) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < cards.size(); ++i)
    idx = idx * static_cast<std::size_t>(cards[i]) + static_cast<std::size_t>(values[i]);
  return idx;
}

void decode_index(std::size_t idx, const std::vector<int>& cards, int* values) {
  for (std::size_t i = cards.size(); i-- > 0;) {
    values[i] = static_cast<int>(idx % static_cast<std::size_t>(cards[i]));
    idx /= static_cast<std::size_t>(cards[i]);
  }
}

DistTable marginal(const DistTable& t, const std::vector<std::string>& keep) {
  std::vector<int> pos;
  pos.reserve(keep.size());
  for (const auto& k : keep) {
    int found = -1;
    for (std::size_t i = 0; i < t.vars.size(); ++i)
      if (t.vars[i] == k) {
        found = static_cast<int>(i);
        break;
      }
    if (found < 0) throw ValidationError("marginal: unknown variable " + k);
    pos.push_back(found);
  }
  DistTable out;
  out.vars = keep;
  for (int i : pos) out.cards.push_back(t.cards[i]);
  out.p.assign(out.size(), 0.0);

  std::vector<int> full(t.vars.size());
  std::vector<int> sub(keep.size());
  for (std::size_t idx = 0; idx < t.p.size(); ++idx) {
    decode_index(idx, t.cards, full.data());
    for (std::size_t j = 0; j < pos.size(); ++j) sub[j] = full[pos[j]];
    out.p[encode_index(out.cards, sub.data())] += t.p[idx];
  }
  return out;
}

}  // namespace causalaug
