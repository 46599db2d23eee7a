#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsh/complex.hpp"

namespace fsh {

// Finite T0 space as its specialization poset. Points are 0..n-1.
// Convention: x <= y iff y lies in every open neighborhood of x; open sets
// are up-closed, U_x = {y : x <= y} is the minimal open containing x.
class FinSpace {
 public:
  FinSpace() : n_(0) {}
  FinSpace(std::size_t n, const std::vector<std::pair<int, int>>& leq_pairs);

  std::size_t size() const { return n_; }
  bool leq(int x, int y) const { return rel_[idx(x) * n_ + idx(y)]; }

  // Throws std::invalid_argument naming the offending pair when the poset
  // axioms fail.
  void validate() const;

  std::vector<int> minimal_open(int x) const;  // U_x, sorted
  std::vector<int> up_closure(const std::vector<int>& s) const;
  std::vector<int> down_closure(const std::vector<int>& s) const;
  bool is_open(const std::vector<int>& s) const;
  bool is_closed(const std::vector<int>& s) const;

  // Length of the longest strict chain (number of edges).
  std::size_t longest_chain() const;

  bool operator==(const FinSpace& o) const { return n_ == o.n_ && rel_ == o.rel_; }

 private:
  std::size_t idx(int x) const {
    if (x < 0 || static_cast<std::size_t>(x) >= n_)
      throw std::invalid_argument("FinSpace: point out of range");
    return static_cast<std::size_t>(x);
  }
  std::size_t n_;
  std::vector<char> rel_;  // rel_[x*n+y] = (x <= y)
};

struct ContinuousMap {
  std::shared_ptr<const FinSpace> src, tgt;
  std::vector<int> assign;

  int operator()(int x) const { return assign.at(static_cast<std::size_t>(x)); }
  // Throws unless monotone (equivalently, continuous).
  void validate() const;
  std::vector<int> preimage(const std::vector<int>& s) const;

  static ContinuousMap identity(std::shared_ptr<const FinSpace> x);
  static ContinuousMap compose(const ContinuousMap& a, const ContinuousMap& b);
  static ContinuousMap to_point(std::shared_ptr<const FinSpace> x,
                                std::shared_ptr<const FinSpace> pt);
};

// Inclusion of a locally closed subset S = V ∩ Z with V the open hull
// (union of minimal opens of S) and Z the down-closure of S.
struct LocallyClosedImmersion {
  std::shared_ptr<const FinSpace> ambient;
  std::vector<int> subset;        // sorted
  std::vector<int> open_hull;     // V
  std::vector<int> closed_part;   // Z

  std::shared_ptr<const FinSpace> sub_space;  // S with induced order
  ContinuousMap inclusion;                    // S -> ambient

  bool contains(int x) const;
  // Index of ambient point x inside the subspace; -1 when absent.
  int sub_index(int x) const;
};

std::optional<LocallyClosedImmersion> factor_locally_closed(
    std::shared_ptr<const FinSpace> ambient, std::vector<int> subset);

// The full space as a locally closed immersion (identity inclusion).
LocallyClosedImmersion whole_space_immersion(std::shared_ptr<const FinSpace> x);

// Induced subspace (any subset) with its inclusion map.
std::pair<std::shared_ptr<const FinSpace>, ContinuousMap> subspace(
    std::shared_ptr<const FinSpace> ambient, const std::vector<int>& subset);

struct CartesianSquare {
  // yp --bp--> y
  //  |         |
  //  ap        a
  //  v         v
  //  xp --b--> x
  std::shared_ptr<const FinSpace> yp;
  ContinuousMap alpha, beta, alpha_p, beta_p;
  // yp points are pairs (y, x') flattened; pair lists kept for inspection
  std::vector<std::pair<int, int>> points;
};

CartesianSquare pullback_square(const ContinuousMap& alpha, const ContinuousMap& beta);

// Simplicial cochain complex of the order complex (strict chains); an
// independent oracle for H^*(X; k).
Complex nerve_cochain(const FinSpace& s, std::uint32_t p = kDefaultPrime);
Complex nerve_cochain_subset(const FinSpace& s, const std::vector<int>& subset,
                             std::uint32_t p = kDefaultPrime);

}  // namespace fsh
