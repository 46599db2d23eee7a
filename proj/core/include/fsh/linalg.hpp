#pragma once

#include <optional>

#include "fsh/matrix.hpp"

namespace fsh {

struct RrefResult {
  Matrix R;  // reduced row echelon form of the input
  Matrix T;  // invertible, T * M = R
  std::size_t rank = 0;
  std::vector<std::size_t> pivots;  // pivot column per pivot row
};

RrefResult rref(const Matrix& m);

std::size_t rank(const Matrix& m);

// Columns form a basis of the null space {x : Mx = 0}.
// Basis is pivot-canonical: one column per free variable, with the free
// variable set to 1 and pivot variables solved.
Matrix kernel(const Matrix& m);

// Particular solution of A x = b (b may have several columns), free
// variables set to zero. Empty optional when inconsistent.
std::optional<Matrix> solve(const Matrix& a, const Matrix& b);

// Solves X A = B, i.e. the transposed problem.
std::optional<Matrix> solve_left(const Matrix& a, const Matrix& b);

std::optional<Matrix> inverse(const Matrix& m);

// Indices of columns of Z whose classes extend col(B) to a basis of
// col([B|Z]); scanned left to right (pivot-canonical complement).
std::vector<std::size_t> extend_basis(const Matrix& b, const Matrix& z);

}  // namespace fsh
