#include "qmt/causal_order.hpp"

#include <algorithm>
#include <functional>

#include "qmt/error.hpp"

namespace qmt {
namespace {

void require_region(const CausalOrder& order, const Region& r) {
  if (r.universe() != order.size()) throw StructuralError("region does not match causal order points");
}

std::size_t index_of(const std::vector<std::string>& pts, const std::string& name) {
  auto it = std::find(pts.begin(), pts.end(), name);
  if (it == pts.end()) throw InputError("unknown point: " + name);
  return static_cast<std::size_t>(it - pts.begin());
}

}  // namespace

CausalOrder::CausalOrder(std::vector<std::string> points,
                         const std::vector<std::pair<std::string, std::string>>& covers)
    : points_(std::move(points)) {
  const std::size_t n = points_.size();
  up_.assign(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i) up_[i].set(i);
  for (const auto& [lo, hi] : covers) up_[index_of(points_, lo)].set(index_of(points_, hi));
  close_and_validate();
}

CausalOrder::CausalOrder(std::vector<std::string> points,
                         const std::vector<std::pair<std::size_t, std::size_t>>& covers)
    : points_(std::move(points)) {
  const std::size_t n = points_.size();
  up_.assign(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i) up_[i].set(i);
  for (const auto& [lo, hi] : covers) {
    if (lo >= n || hi >= n) throw InputError("cover index out of range");
    up_[lo].set(hi);
  }
  close_and_validate();
}

void CausalOrder::close_and_validate() {
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (points_[i] == points_[j]) throw InputError("duplicate point name: " + points_[i]);
  // Warshall over bit rows.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (up_[i].test(k)) up_[i] |= up_[k];
  down_.assign(n, Bits(n));
  for (std::size_t i = 0; i < n; ++i)
    for (auto j = up_[i].find_first(); j != Bits::npos; j = up_[i].find_next(j)) down_[j].set(i);
  for (std::size_t i = 0; i < n; ++i) {
    Bits both = up_[i] & down_[i];
    both.reset(i);
    if (both.any()) throw InputError("causal order is not antisymmetric (cycle through " + points_[i] + ")");
  }
}

std::size_t CausalOrder::point_index(const std::string& name) const { return index_of(points_, name); }

Region CausalOrder::region(const std::vector<std::string>& names) const {
  Bits b(size());
  for (const auto& n : names) b.set(point_index(n));
  return Region(std::move(b));
}

std::vector<std::string> CausalOrder::region_names(const Region& r) const {
  std::vector<std::string> out;
  for (std::size_t i : r.indices()) out.push_back(points_.at(i));
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> CausalOrder::covers() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = size();
  for (std::size_t x = 0; x < n; ++x)
    for (auto y = up_[x].find_first(); y != Bits::npos; y = up_[x].find_next(y)) {
      if (y == x) continue;
      // x < y is a cover iff no z strictly between.
      Bits between = up_[x] & down_[y];
      if (between.count() == 2) out.emplace_back(x, y);
    }
  return out;
}

CausalOrder CausalOrder::reversed() const {
  std::vector<std::pair<std::size_t, std::size_t>> rev;
  for (auto [x, y] : covers()) rev.emplace_back(y, x);
  return CausalOrder(points_, rev);
}

Region future_set(const CausalOrder& order, const Region& r) {
  require_region(order, r);
  Bits out(order.size());
  for (std::size_t x : r.indices()) out |= order.up(x);
  return Region(std::move(out));
}

Region past_of(const CausalOrder& order, const Region& r) {
  require_region(order, r);
  Bits out(order.size());
  for (std::size_t x : r.indices()) out |= order.down(x);
  return Region(std::move(out));
}

Region shadow(const CausalOrder& order, const Region& r) { return ~future_set(order, r); }

bool is_past_set(const CausalOrder& order, const Region& z) { return past_of(order, z) == z; }

Region future_domain(const CausalOrder& order, const Region& z) {
  require_region(order, z);
  if (!is_past_set(order, z)) throw PreconditionError("future domain requires a past set");
  const std::size_t n = order.size();
  Bits minimal(n);
  for (std::size_t x = 0; x < n; ++x)
    if (order.down(x).count() == 1) minimal.set(x);
  Bits out(n);
  for (std::size_t p = 0; p < n; ++p) {
    Bits roots = order.down(p) & minimal;
    if (roots.is_subset_of(z.bits()) && roots.intersects(z.bits())) out.set(p);
  }
  return Region(std::move(out));
}

bool are_spacelike(const CausalOrder& order, const Region& r1, const Region& r2) {
  require_region(order, r1);
  require_region(order, r2);
  Region related = future_set(order, r1) | past_of(order, r1);
  return !related.intersects(r2);
}

bool GeometryReport::ok() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const GeometryClause& c) { return c.pass; });
}

GeometryReport validate_scenario_geometry(const CausalOrder& order, const Region& z, const Region& a,
                                          const Region& b) {
  GeometryReport rep;
  bool z_past = is_past_set(order, z);
  rep.clauses.push_back({"Z is a past set", z_past});
  bool in_domain = false;
  if (z_past) {
    Region d = future_domain(order, z);
    in_domain = a.subset_of(d) && b.subset_of(d);
  }
  rep.clauses.push_back({"A and B lie in D+(Z)", in_domain});
  rep.clauses.push_back({"A and B do not intersect Z", !a.intersects(z) && !b.intersects(z)});
  rep.clauses.push_back({"A and B are spacelike", are_spacelike(order, a, b)});
  rep.clauses.push_back({"Z+A+B is a past set", is_past_set(order, z | a | b)});
  return rep;
}

std::optional<std::vector<Region>> enumerate_down_sets(const CausalOrder& order, std::size_t limit) {
  // Decide points in a linear extension; a point may join only if its whole
  // strict past already joined, and may stay out only if no later point
  // needs it (handled by the first rule).
  const std::size_t n = order.size();
  std::vector<std::size_t> ext(n);
  for (std::size_t i = 0; i < n; ++i) ext[i] = i;
  std::stable_sort(ext.begin(), ext.end(),
                   [&](std::size_t x, std::size_t y) { return order.down(x).count() < order.down(y).count(); });
  std::vector<Region> out;
  bool overflow = false;
  Bits cur(n);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (overflow) return;
    if (i == n) {
      if (out.size() >= limit) {
        overflow = true;
        return;
      }
      out.emplace_back(cur);
      return;
    }
    std::size_t p = ext[i];
    rec(i + 1);
    Bits strict = order.down(p);
    strict.reset(p);
    if (strict.is_subset_of(cur)) {
      cur.set(p);
      rec(i + 1);
      cur.reset(p);
    }
  };
  rec(0);
  if (overflow) return std::nullopt;
  return out;
}

}  // namespace qmt
