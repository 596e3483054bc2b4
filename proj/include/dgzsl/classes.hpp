#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgzsl/matrix.hpp"

namespace dgzsl {

/// An ordered set of class ids with their attribute vectors as rows.
struct ClassSet {
  std::vector<int> ids;
  Matrix attributes;  // ids.size() x M

  /// Picks rows of `all_attributes` (indexed by class id) for `ids`.
  static ClassSet select(const Matrix& all_attributes, std::span<const int> ids);

  std::size_t size() const { return ids.size(); }
  /// Row of `id` in this set; throws DataError when absent.
  std::size_t position(int id) const;
  bool contains(int id) const;
};

}  // namespace dgzsl
