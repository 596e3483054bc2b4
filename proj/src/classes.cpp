#include "dgzsl/classes.hpp"

#include <algorithm>
#include <string>

#include "dgzsl/error.hpp"

namespace dgzsl {

ClassSet ClassSet::select(const Matrix& all_attributes, std::span<const int> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= all_attributes.rows()) {
      throw DataError("class id " + std::to_string(id) + " has no attribute row (" +
                      std::to_string(all_attributes.rows()) + " classes)");
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  return ClassSet{{ids.begin(), ids.end()}, gather_rows(all_attributes, rows)};
}

std::size_t ClassSet::position(int id) const {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) {
    throw DataError("class " + std::to_string(id) + " is not in the active class set");
  }
  return static_cast<std::size_t>(it - ids.begin());
}

bool ClassSet::contains(int id) const {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace dgzsl
