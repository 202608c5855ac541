#include "qmt/histories.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

#include "qmt/error.hpp"

namespace qmt {
namespace {

std::uint64_t next_space_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

void require_pair(const Event& e, const Event& f) {
  if (e.space_id() != f.space_id() || e.universe() != f.universe())
    throw StructuralError("events belong to different history spaces");
}

struct VecHash {
  std::size_t operator()(const std::vector<Value>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (Value x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
    return h;
  }
};

}  // namespace

std::vector<std::size_t> Event::indices() const {
  std::vector<std::size_t> out;
  out.reserve(bits_.count());
  for (auto i = bits_.find_first(); i != Bits::npos; i = bits_.find_next(i)) out.push_back(i);
  return out;
}

bool Event::operator==(const Event& other) const {
  return space_id_ == other.space_id_ && bits_ == other.bits_;
}

Event complement(const Event& e) { return Event(e.space_id(), ~e.bits()); }

Event unite(const Event& e, const Event& f) {
  require_pair(e, f);
  return Event(e.space_id(), e.bits() | f.bits());
}

Event intersect(const Event& e, const Event& f) {
  require_pair(e, f);
  return Event(e.space_id(), e.bits() & f.bits());
}

Event symmetric_difference(const Event& e, const Event& f) {
  require_pair(e, f);
  return Event(e.space_id(), e.bits() ^ f.bits());
}

Event difference(const Event& e, const Event& f) {
  require_pair(e, f);
  return Event(e.space_id(), e.bits() - f.bits());
}

Event material_implication(const Event& e, const Event& f) {
  require_pair(e, f);
  return Event(e.space_id(), ~e.bits() | f.bits());
}

bool is_partition(std::span<const Event> events) {
  if (events.empty()) return false;
  Bits acc(events[0].universe());
  for (const Event& e : events) {
    if (e.space_id() != events[0].space_id() || e.universe() != acc.size()) return false;
    if (acc.intersects(e.bits())) return false;
    acc |= e.bits();
  }
  return acc.all();
}

Region Region::all(std::size_t n) { return Region(~Bits(n)); }

Region Region::of(std::size_t n, std::initializer_list<std::size_t> idx) {
  return of(n, std::vector<std::size_t>(idx));
}

Region Region::of(std::size_t n, const std::vector<std::size_t>& idx) {
  Bits b(n);
  for (std::size_t i : idx) {
    if (i >= n) throw InputError("region point index out of range");
    b.set(i);
  }
  return Region(std::move(b));
}

std::vector<std::size_t> Region::indices() const {
  std::vector<std::size_t> out;
  for (auto i = bits_.find_first(); i != Bits::npos; i = bits_.find_next(i)) out.push_back(i);
  return out;
}

HistorySpace::HistorySpace(std::vector<std::string> points, std::vector<int> alphabets,
                           std::vector<std::vector<Value>> histories, std::vector<std::string> labels)
    : points_(std::move(points)), alphabets_(std::move(alphabets)), labels_(std::move(labels)) {
  n_ = histories.size();
  values_.reserve(n_ * points_.size());
  for (const auto& h : histories) {
    if (h.size() != points_.size()) throw InputError("history length differs from number of points");
    values_.insert(values_.end(), h.begin(), h.end());
  }
  validate();
}

HistorySpace::HistorySpace(std::vector<std::string> points, std::vector<int> alphabets, std::vector<Value> flat,
                           std::vector<std::string> labels)
    : points_(std::move(points)), alphabets_(std::move(alphabets)), values_(std::move(flat)),
      labels_(std::move(labels)) {
  n_ = points_.empty() ? 1 : values_.size() / points_.size();
  if (!points_.empty() && values_.size() % points_.size() != 0)
    throw InputError("flat history storage is not a multiple of the point count");
  validate();
}

void HistorySpace::validate() {
  if (n_ == 0) throw InputError("history space must contain at least one history");
  if (n_ > kMaxHistories) throw BudgetExceeded("history space exceeds 65536 histories");
  if (alphabets_.size() != points_.size()) throw InputError("alphabet count differs from point count");
  std::unordered_set<std::string> names;
  for (const auto& p : points_)
    if (!names.insert(p).second) throw InputError("duplicate point name: " + p);
  for (int a : alphabets_)
    if (a <= 0) throw InputError("alphabet sizes must be positive");
  const std::size_t np = points_.size();
  for (std::size_t h = 0; h < n_; ++h)
    for (std::size_t p = 0; p < np; ++p) {
      Value v = values_[h * np + p];
      if (v < 0 || v >= alphabets_[p])
        throw InputError("history value outside alphabet at point " + points_[p]);
    }
  std::unordered_set<std::vector<Value>, VecHash> seen;
  seen.reserve(n_ * 2);
  for (std::size_t h = 0; h < n_; ++h) {
    auto s = history(h);
    if (!seen.emplace(s.begin(), s.end()).second) throw InputError("histories are not pairwise distinct");
  }
  if (!labels_.empty() && labels_.size() != n_) throw InputError("label count differs from history count");
  id_ = next_space_id();
}

std::size_t HistorySpace::point_index(const std::string& name) const {
  auto it = std::find(points_.begin(), points_.end(), name);
  if (it == points_.end()) throw InputError("unknown point: " + name);
  return static_cast<std::size_t>(it - points_.begin());
}

Region HistorySpace::region(const std::vector<std::string>& names) const {
  Bits b(points_.size());
  for (const auto& n : names) b.set(point_index(n));
  return Region(std::move(b));
}

std::vector<std::string> HistorySpace::region_names(const Region& r) const {
  std::vector<std::string> out;
  for (std::size_t i : r.indices()) out.push_back(points_.at(i));
  return out;
}

std::string HistorySpace::label(std::size_t h) const {
  if (!labels_.empty()) return labels_[h];
  std::string s;
  for (std::size_t p = 0; p < points_.size(); ++p) {
    if (p) s += ',';
    s += std::to_string(value(h, p));
  }
  return s;
}

Event HistorySpace::event(const std::vector<std::size_t>& indices) const {
  Bits b(n_);
  for (std::size_t i : indices) {
    if (i >= n_) throw InputError("event index out of range");
    b.set(i);
  }
  return Event(id_, std::move(b));
}

Event HistorySpace::point_event(std::size_t p, Value v) const {
  Bits b(n_);
  for (std::size_t h = 0; h < n_; ++h)
    if (value(h, p) == v) b.set(h);
  return Event(id_, std::move(b));
}

void HistorySpace::require_same(const Event& e) const {
  if (e.space_id() != id_ || e.universe() != n_)
    throw StructuralError("event does not belong to this history space");
}

SpacePtr make_space(std::vector<std::string> points, std::vector<int> alphabets,
                    std::vector<std::vector<Value>> histories, std::vector<std::string> labels) {
  return std::make_shared<const HistorySpace>(std::move(points), std::move(alphabets), std::move(histories),
                                              std::move(labels));
}

std::vector<Value> restrict_history(const HistorySpace& hs, std::size_t h, const Region& r) {
  if (r.universe() != hs.num_points()) throw StructuralError("region does not match history space points");
  std::vector<Value> out;
  for (std::size_t p : r.indices()) out.push_back(hs.value(h, p));
  return out;
}

RegionAlgebra region_algebra(const HistorySpace& hs, const Region& r) {
  if (r.universe() != hs.num_points()) throw StructuralError("region does not match history space points");
  const auto pts = r.indices();
  const std::size_t n = hs.size();
  RegionAlgebra alg;
  alg.region = r;
  alg.atom_of.assign(n, 0);

  // Mixed-radix key with the first region point most significant, so key
  // order equals lexicographic order of restricted value-vectors.
  bool fits = true;
  std::uint64_t radix_product = 1;
  for (std::size_t p : pts) {
    auto a = static_cast<std::uint64_t>(hs.alphabets()[p]);
    if (radix_product > std::numeric_limits<std::uint64_t>::max() / a) {
      fits = false;
      break;
    }
    radix_product *= a;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (fits) {
    std::vector<std::uint64_t> key(n, 0);
    for (std::size_t h = 0; h < n; ++h) {
      std::uint64_t k = 0;
      for (std::size_t p : pts) k = k * static_cast<std::uint64_t>(hs.alphabets()[p]) + hs.value(h, p);
      key[h] = k;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t h = order[i];
      if (i == 0 || key[h] != key[order[i - 1]]) {
        alg.atoms.emplace_back(hs.id(), Bits(n));
        alg.representatives.push_back(restrict_history(hs, h, r));
      }
      alg.atom_of[h] = alg.atoms.size() - 1;
    }
  } else {
    std::map<std::vector<Value>, std::vector<std::size_t>> groups;
    for (std::size_t h = 0; h < n; ++h) groups[restrict_history(hs, h, r)].push_back(h);
    for (auto& [rep, members] : groups) {
      alg.atoms.emplace_back(hs.id(), Bits(n));
      alg.representatives.push_back(rep);
      for (std::size_t h : members) alg.atom_of[h] = alg.atoms.size() - 1;
    }
  }
  std::vector<Bits> bits(alg.atoms.size(), Bits(n));
  for (std::size_t h = 0; h < n; ++h) bits[alg.atom_of[h]].set(h);
  for (std::size_t a = 0; a < bits.size(); ++a) alg.atoms[a] = Event(hs.id(), std::move(bits[a]));
  return alg;
}

Event cylinder_event(const HistorySpace& hs, const Region& r, const std::vector<Value>& rep) {
  if (r.universe() != hs.num_points()) throw StructuralError("region does not match history space points");
  const auto pts = r.indices();
  if (rep.size() != pts.size()) throw InputError("representative length differs from region size");
  Bits b(hs.size());
  for (std::size_t h = 0; h < hs.size(); ++h) {
    bool match = true;
    for (std::size_t i = 0; i < pts.size() && match; ++i) match = hs.value(h, pts[i]) == rep[i];
    if (match) b.set(h);
  }
  return Event(hs.id(), std::move(b));
}

bool in_region_algebra(const HistorySpace& hs, const Event& e, const Region& r) {
  hs.require_same(e);
  RegionAlgebra alg = region_algebra(hs, r);
  for (const Event& atom : alg.atoms) {
    Bits inside = atom.bits() & e.bits();
    if (inside.any() && inside != atom.bits()) return false;
  }
  return true;
}

Event build_pr_event(const PrEventLabels& l) {
  Event first_antecedent = unite(unite(l.s11, l.s12), l.s21);
  Event correlated = unite(l.uu, l.dd);
  Event anticorrelated = unite(l.ud, l.du);
  return intersect(material_implication(first_antecedent, correlated),
                   material_implication(l.s22, anticorrelated));
}

Event build_ghz_event(const GhzEventLabels& l) {
  Event mixed = unite(unite(l.xyy, l.yxy), l.yyx);
  Event odd = unite(unite(l.uud, l.udu), unite(l.duu, l.ddd));
  Event even = unite(unite(l.ddu, l.dud), unite(l.udd, l.uuu));
  return intersect(material_implication(mixed, odd), material_implication(l.xxx, even));
}

}  // namespace qmt
