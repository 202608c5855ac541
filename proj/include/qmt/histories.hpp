#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace qmt {

using Value = std::int32_t;
using Bits = boost::dynamic_bitset<>;

class HistorySpace;
using SpacePtr = std::shared_ptr<const HistorySpace>;

// Subset of the histories of one HistorySpace.
class Event {
 public:
  Event() = default;
  Event(std::uint64_t space_id, Bits bits) : space_id_(space_id), bits_(std::move(bits)) {}

  std::uint64_t space_id() const { return space_id_; }
  const Bits& bits() const { return bits_; }
  std::size_t universe() const { return bits_.size(); }
  std::size_t count() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  bool contains(std::size_t h) const { return bits_.test(h); }
  std::vector<std::size_t> indices() const;

  bool operator==(const Event& other) const;

 private:
  std::uint64_t space_id_ = 0;
  Bits bits_;
};

Event complement(const Event& e);
Event unite(const Event& e, const Event& f);
Event intersect(const Event& e, const Event& f);
Event symmetric_difference(const Event& e, const Event& f);
Event difference(const Event& e, const Event& f);
// (Omega \ E) u F
Event material_implication(const Event& e, const Event& f);
bool is_partition(std::span<const Event> events);

// Point subset of a causal order / history space, by point index.
class Region {
 public:
  Region() = default;
  explicit Region(Bits bits) : bits_(std::move(bits)) {}
  static Region none(std::size_t n) { return Region(Bits(n)); }
  static Region all(std::size_t n);
  static Region of(std::size_t n, std::initializer_list<std::size_t> idx);
  static Region of(std::size_t n, const std::vector<std::size_t>& idx);

  const Bits& bits() const { return bits_; }
  std::size_t universe() const { return bits_.size(); }
  std::size_t count() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  bool contains(std::size_t p) const { return bits_.test(p); }
  std::vector<std::size_t> indices() const;
  bool subset_of(const Region& r) const { return bits_.is_subset_of(r.bits_); }
  bool intersects(const Region& r) const { return bits_.intersects(r.bits_); }

  Region operator|(const Region& r) const { return Region(bits_ | r.bits_); }
  Region operator&(const Region& r) const { return Region(bits_ & r.bits_); }
  Region operator-(const Region& r) const { return Region(bits_ - r.bits_); }
  Region operator~() const { return Region(~bits_); }
  bool operator==(const Region& r) const { return bits_ == r.bits_; }

 private:
  Bits bits_;
};

class HistorySpace {
 public:
  static constexpr std::size_t kMaxHistories = 65536;

  HistorySpace(std::vector<std::string> points, std::vector<int> alphabets,
               std::vector<std::vector<Value>> histories, std::vector<std::string> labels = {});
  // Flat storage, row-major by history.
  HistorySpace(std::vector<std::string> points, std::vector<int> alphabets, std::vector<Value> flat,
               std::vector<std::string> labels = {});

  std::size_t size() const { return n_; }
  std::size_t num_points() const { return points_.size(); }
  const std::vector<std::string>& points() const { return points_; }
  const std::vector<int>& alphabets() const { return alphabets_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::uint64_t id() const { return id_; }

  std::size_t point_index(const std::string& name) const;
  Region region(const std::vector<std::string>& names) const;
  std::vector<std::string> region_names(const Region& r) const;

  Value value(std::size_t h, std::size_t p) const { return values_[h * points_.size() + p]; }
  std::span<const Value> history(std::size_t h) const {
    return {values_.data() + h * points_.size(), points_.size()};
  }
  std::string label(std::size_t h) const;

  Event empty_event() const { return Event(id_, Bits(n_)); }
  Event full_event() const { return Event(id_, ~Bits(n_)); }
  Event event(const std::vector<std::size_t>& indices) const;
  // All histories whose value at point p equals v.
  Event point_event(std::size_t p, Value v) const;

  void require_same(const Event& e) const;

 private:
  void validate();

  std::vector<std::string> points_;
  std::vector<int> alphabets_;
  std::vector<Value> values_;
  std::vector<std::string> labels_;
  std::size_t n_ = 0;
  std::uint64_t id_ = 0;
};

SpacePtr make_space(std::vector<std::string> points, std::vector<int> alphabets,
                    std::vector<std::vector<Value>> histories, std::vector<std::string> labels = {});

struct RegionAlgebra {
  Region region;
  std::vector<Event> atoms;
  std::vector<std::vector<Value>> representatives;  // lexicographic order
  std::vector<std::size_t> atom_of;                 // history index -> atom index
};

std::vector<Value> restrict_history(const HistorySpace& hs, std::size_t h, const Region& r);
RegionAlgebra region_algebra(const HistorySpace& hs, const Region& r);
Event cylinder_event(const HistorySpace& hs, const Region& r, const std::vector<Value>& rep);
// True iff e is a union of atoms of the algebra of r.
bool in_region_algebra(const HistorySpace& hs, const Event& e, const Region& r);

struct PrEventLabels {
  Event s11, s12, s21, s22;  // joint setting events
  Event uu, ud, du, dd;      // joint beam events
};
Event build_pr_event(const PrEventLabels& l);

struct GhzEventLabels {
  Event xyy, yxy, yyx, xxx;
  Event uud, udu, duu, ddd;
  Event ddu, dud, udd, uuu;
};
Event build_ghz_event(const GhzEventLabels& l);

}  // namespace qmt
