#include "fsh/space.hpp"

#include <algorithm>
#include <set>

namespace fsh {

FinSpace::FinSpace(std::size_t n, const std::vector<std::pair<int, int>>& leq_pairs)
    : n_(n), rel_(n * n, 0) {
  for (std::size_t x = 0; x < n; ++x) rel_[x * n + x] = 1;
  for (auto& [x, y] : leq_pairs) rel_[idx(x) * n_ + idx(y)] = 1;
  // transitive closure
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (rel_[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (rel_[k * n + j]) rel_[i * n + j] = 1;
}

void FinSpace::validate() const {
  for (std::size_t x = 0; x < n_; ++x)
    if (!rel_[x * n_ + x])
      throw std::invalid_argument("FinSpace: reflexivity fails at " + std::to_string(x));
  for (std::size_t x = 0; x < n_; ++x)
    for (std::size_t y = 0; y < n_; ++y)
      if (x != y && rel_[x * n_ + y] && rel_[y * n_ + x])
        throw std::invalid_argument("FinSpace: antisymmetry fails at (" +
                                    std::to_string(x) + "," + std::to_string(y) + ")");
  for (std::size_t x = 0; x < n_; ++x)
    for (std::size_t y = 0; y < n_; ++y)
      if (rel_[x * n_ + y])
        for (std::size_t z = 0; z < n_; ++z)
          if (rel_[y * n_ + z] && !rel_[x * n_ + z])
            throw std::invalid_argument("FinSpace: transitivity fails at (" +
                                        std::to_string(x) + "," + std::to_string(y) +
                                        "," + std::to_string(z) + ")");
}

std::vector<int> FinSpace::minimal_open(int x) const {
  std::vector<int> out;
  idx(x);
  for (std::size_t y = 0; y < n_; ++y)
    if (leq(x, static_cast<int>(y))) out.push_back(static_cast<int>(y));
  return out;
}

std::vector<int> FinSpace::up_closure(const std::vector<int>& s) const {
  std::set<int> out;
  for (int x : s)
    for (int y : minimal_open(x)) out.insert(y);
  return {out.begin(), out.end()};
}

std::vector<int> FinSpace::down_closure(const std::vector<int>& s) const {
  std::set<int> out;
  for (int x : s) {
    idx(x);
    for (std::size_t y = 0; y < n_; ++y)
      if (leq(static_cast<int>(y), x)) out.insert(static_cast<int>(y));
  }
  return {out.begin(), out.end()};
}

bool FinSpace::is_open(const std::vector<int>& s) const {
  return up_closure(s) == s;
}

bool FinSpace::is_closed(const std::vector<int>& s) const {
  return down_closure(s) == s;
}

std::size_t FinSpace::longest_chain() const {
  // DAG longest path over the strict order
  std::vector<std::size_t> best(n_, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t x = 0; x < n_; ++x)
      for (std::size_t y = 0; y < n_; ++y)
        if (x != y && rel_[x * n_ + y] && best[y] < best[x] + 1) {
          best[y] = best[x] + 1;
          changed = true;
        }
  }
  std::size_t m = 0;
  for (auto v : best) m = std::max(m, v);
  return m;
}

void ContinuousMap::validate() const {
  if (assign.size() != src->size())
    throw std::invalid_argument("ContinuousMap: assignment size mismatch");
  for (std::size_t x = 0; x < src->size(); ++x)
    for (std::size_t y = 0; y < src->size(); ++y)
      if (src->leq(static_cast<int>(x), static_cast<int>(y)) &&
          !tgt->leq(assign[x], assign[y]))
        throw std::invalid_argument("ContinuousMap: not continuous at (" +
                                    std::to_string(x) + "," + std::to_string(y) + ")");
}

std::vector<int> ContinuousMap::preimage(const std::vector<int>& s) const {
  std::vector<int> out;
  for (std::size_t x = 0; x < src->size(); ++x)
    if (std::find(s.begin(), s.end(), assign[x]) != s.end())
      out.push_back(static_cast<int>(x));
  return out;
}

ContinuousMap ContinuousMap::identity(std::shared_ptr<const FinSpace> x) {
  ContinuousMap m{x, x, {}};
  for (std::size_t i = 0; i < x->size(); ++i) m.assign.push_back(static_cast<int>(i));
  return m;
}

ContinuousMap ContinuousMap::compose(const ContinuousMap& a, const ContinuousMap& b) {
  if (!(*b.tgt == *a.src))
    throw std::invalid_argument("ContinuousMap::compose: middle space mismatch");
  ContinuousMap m{b.src, a.tgt, {}};
  for (int v : b.assign) m.assign.push_back(a.assign.at(static_cast<std::size_t>(v)));
  return m;
}

ContinuousMap ContinuousMap::to_point(std::shared_ptr<const FinSpace> x,
                                      std::shared_ptr<const FinSpace> pt) {
  if (pt->size() != 1) throw std::invalid_argument("to_point: target must be a point");
  return ContinuousMap{x, pt, std::vector<int>(x->size(), 0)};
}

bool LocallyClosedImmersion::contains(int x) const {
  return std::binary_search(subset.begin(), subset.end(), x);
}

int LocallyClosedImmersion::sub_index(int x) const {
  auto it = std::lower_bound(subset.begin(), subset.end(), x);
  if (it == subset.end() || *it != x) return -1;
  return static_cast<int>(it - subset.begin());
}

std::pair<std::shared_ptr<const FinSpace>, ContinuousMap> subspace(
    std::shared_ptr<const FinSpace> ambient, const std::vector<int>& subset) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < subset.size(); ++i)
    for (std::size_t j = 0; j < subset.size(); ++j)
      if (ambient->leq(subset[i], subset[j]))
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  auto sub = std::make_shared<FinSpace>(subset.size(), pairs);
  ContinuousMap incl{sub, ambient, subset};
  return {sub, incl};
}

std::optional<LocallyClosedImmersion> factor_locally_closed(
    std::shared_ptr<const FinSpace> ambient, std::vector<int> subset) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  std::vector<int> up = ambient->up_closure(subset);
  std::vector<int> down = ambient->down_closure(subset);
  std::vector<int> inter;
  std::set_intersection(up.begin(), up.end(), down.begin(), down.end(),
                        std::back_inserter(inter));
  if (inter != subset) return std::nullopt;
  LocallyClosedImmersion j;
  j.ambient = ambient;
  j.subset = subset;
  j.open_hull = up;
  j.closed_part = down;
  auto [sub, incl] = subspace(ambient, subset);
  j.sub_space = sub;
  j.inclusion = incl;
  return j;
}

LocallyClosedImmersion whole_space_immersion(std::shared_ptr<const FinSpace> x) {
  std::vector<int> all;
  for (std::size_t i = 0; i < x->size(); ++i) all.push_back(static_cast<int>(i));
  return factor_locally_closed(x, all).value();
}

CartesianSquare pullback_square(const ContinuousMap& alpha, const ContinuousMap& beta) {
  if (!(*alpha.tgt == *beta.tgt))
    throw std::invalid_argument("pullback_square: targets differ");
  CartesianSquare sq;
  sq.alpha = alpha;
  sq.beta = beta;
  for (std::size_t y = 0; y < alpha.src->size(); ++y)
    for (std::size_t xp = 0; xp < beta.src->size(); ++xp)
      if (alpha.assign[y] == beta.assign[xp])
        sq.points.emplace_back(static_cast<int>(y), static_cast<int>(xp));
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < sq.points.size(); ++i)
    for (std::size_t j = 0; j < sq.points.size(); ++j)
      if (alpha.src->leq(sq.points[i].first, sq.points[j].first) &&
          beta.src->leq(sq.points[i].second, sq.points[j].second))
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  sq.yp = std::make_shared<FinSpace>(sq.points.size(), pairs);
  sq.beta_p = ContinuousMap{sq.yp, alpha.src, {}};
  sq.alpha_p = ContinuousMap{sq.yp, beta.src, {}};
  for (auto& [y, xp] : sq.points) {
    sq.beta_p.assign.push_back(y);
    sq.alpha_p.assign.push_back(xp);
  }
  return sq;
}

Complex nerve_cochain_subset(const FinSpace& s, const std::vector<int>& subset,
                             std::uint32_t p) {
  // enumerate strict chains in the induced subposet
  std::vector<std::vector<std::vector<int>>> chains;  // chains[k] = k-simplices
  chains.push_back({});
  for (int x : subset) chains[0].push_back({x});
  while (!chains.back().empty()) {
    std::vector<std::vector<int>> next;
    for (auto& c : chains.back())
      for (int y : subset)
        if (y != c.back() && s.leq(c.back(), y)) {
          auto d = c;
          d.push_back(y);
          next.push_back(d);
        }
    chains.push_back(next);
  }
  chains.pop_back();
  Complex cx(p);
  for (std::size_t k = 0; k < chains.size(); ++k)
    cx.set_dim(static_cast<int>(k), chains[k].size());
  auto index_of = [&](std::size_t k, const std::vector<int>& c) -> std::size_t {
    auto& lvl = chains[k];
    return static_cast<std::size_t>(
        std::find(lvl.begin(), lvl.end(), c) - lvl.begin());
  };
  for (std::size_t k = 0; k + 1 < chains.size(); ++k) {
    Matrix d(chains[k + 1].size(), chains[k].size(), p);
    for (std::size_t r = 0; r < chains[k + 1].size(); ++r) {
      const auto& c = chains[k + 1][r];
      for (std::size_t i = 0; i < c.size(); ++i) {
        std::vector<int> face;
        for (std::size_t t = 0; t < c.size(); ++t)
          if (t != i) face.push_back(c[t]);
        std::size_t col = index_of(k, face);
        std::int64_t cur = d.at(r, col);
        d.set(r, col, (i % 2 == 0) ? cur + 1 : cur - 1);
      }
    }
    cx.set_diff(static_cast<int>(k), d);
  }
  return cx;
}

Complex nerve_cochain(const FinSpace& s, std::uint32_t p) {
  std::vector<int> all;
  for (std::size_t i = 0; i < s.size(); ++i) all.push_back(static_cast<int>(i));
  return nerve_cochain_subset(s, all, p);
}

}  // namespace fsh
