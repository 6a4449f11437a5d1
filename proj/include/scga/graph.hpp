#pragma once

#include <cstdint>
#include <vector>

namespace scga {

// Dense boolean matrix used for graph edges, adjacency powers, and attention
// neighborhoods. Entries are 0/1 in a flat row-major buffer, which also
// serves directly as a masked_softmax mask.
struct BoolMat {
  std::size_t rows = 0, cols = 0;
  std::vector<std::uint8_t> v;

  BoolMat() = default;
  BoolMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0) {}

  std::uint8_t get(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
  void set(std::size_t i, std::size_t j, bool on = true) { v[i * cols + j] = on ? 1 : 0; }

  static BoolMat identity(std::size_t n) {
    BoolMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i);
    return m;
  }

  static BoolMat full(std::size_t n) {
    BoolMat m(n, n);
    for (auto& e : m.v) e = 1;
    return m;
  }

  void set_diagonal() {
    for (std::size_t i = 0; i < rows && i < cols; ++i) set(i, i);
  }

  BoolMat transposed() const {
    BoolMat t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t.v[j * rows + i] = get(i, j);
    return t;
  }

  bool symmetric() const {
    if (rows != cols) return false;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = i + 1; j < cols; ++j)
        if (get(i, j) != get(j, i)) return false;
    return true;
  }

  friend bool operator==(const BoolMat& a, const BoolMat& b) {
    return a.rows == b.rows && a.cols == b.cols && a.v == b.v;
  }

  // Entrywise containment: every set bit of *this is set in other.
  bool subset_of(const BoolMat& other) const {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] && !other.v[i]) return false;
    return true;
  }
};

// Boolean matrix product: out[i,j] = OR_k (a[i,k] AND b[k,j]).
BoolMat bool_multiply(const BoolMat& a, const BoolMat& b);

}  // namespace scga
