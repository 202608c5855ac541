#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmt/histories.hpp"

namespace qmt {

class CausalOrder {
 public:
  // Relation generated by covering pairs (lower, upper), transitively closed.
  CausalOrder(std::vector<std::string> points, const std::vector<std::pair<std::string, std::string>>& covers);
  CausalOrder(std::vector<std::string> points, const std::vector<std::pair<std::size_t, std::size_t>>& covers);

  std::size_t size() const { return points_.size(); }
  const std::vector<std::string>& points() const { return points_; }
  std::size_t point_index(const std::string& name) const;
  Region region(const std::vector<std::string>& names) const;
  std::vector<std::string> region_names(const Region& r) const;

  bool leq(std::size_t x, std::size_t y) const { return up_[x].test(y); }
  const Bits& up(std::size_t x) const { return up_[x]; }      // {y : x <= y}
  const Bits& down(std::size_t x) const { return down_[x]; }  // {y : y <= x}

  // Covering pairs of the Hasse diagram.
  std::vector<std::pair<std::size_t, std::size_t>> covers() const;
  CausalOrder reversed() const;

 private:
  void close_and_validate();

  std::vector<std::string> points_;
  std::vector<Bits> up_;
  std::vector<Bits> down_;
};

Region future_set(const CausalOrder& order, const Region& r);  // J+
Region past_of(const CausalOrder& order, const Region& r);     // J-
Region shadow(const CausalOrder& order, const Region& r);      // M \ J+(R)
bool is_past_set(const CausalOrder& order, const Region& z);
// p in D+(Z) iff every minimal element of J-(p) lies in Z.
Region future_domain(const CausalOrder& order, const Region& z);
bool are_spacelike(const CausalOrder& order, const Region& r1, const Region& r2);

struct GeometryClause {
  std::string name;
  bool pass = false;
};

struct GeometryReport {
  std::vector<GeometryClause> clauses;
  bool ok() const;
};

GeometryReport validate_scenario_geometry(const CausalOrder& order, const Region& z, const Region& a,
                                          const Region& b);

// All down-sets (including the empty set and M), or nullopt when more than
// `limit` exist.
std::optional<std::vector<Region>> enumerate_down_sets(const CausalOrder& order, std::size_t limit);

inline constexpr std::size_t kExhaustivePointLimit = 12;
inline constexpr std::size_t kDownSetLimit = 4096;

}  // namespace qmt
