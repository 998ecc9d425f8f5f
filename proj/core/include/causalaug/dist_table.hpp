#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace causalaug {

// Dense joint distribution over a small set of named discrete variables.
// Layout is row-major with vars[0] as the slowest (outermost) dimension.
struct DistTable {
  std::vector<std::string> vars;
  std::vector<int> cards;
  std::vector<double> p;

  std::size_t size() const;
  int card_of(const std::string& var) const;

  // Checks shape, non-negativity, and total mass within tol of 1.
  void validate(double tol = 1e-9) const;
};

double total_mass(const DistTable& t);

// Encode a per-variable value vector (aligned with cards) into a flat index.
std::size_t encode_index(const std::vector<int>& cards, const int* values);

// Decode a flat index into values, aligned with cards.
void decode_index(std::size_t idx, const std::vector<int>& cards, int* values);

// Marginal over `keep`, in the order given. Every kept name must exist.
DistTable marginal(const DistTable& t, const std::vector<std::string>& keep);

}  // namespace causalaug
