#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sightread/notes.hpp"

namespace sightread {

// Unordered pitch-class pair; (A, E) and (E, A) are the same pair.
struct PitchPair {
  PitchClass lo;
  PitchClass hi;

  PitchPair(PitchClass a, PitchClass b) {
    if (static_cast<int>(a) <= static_cast<int>(b)) {
      lo = a;
      hi = b;
    } else {
      lo = b;
      hi = a;
    }
  }

  friend bool operator==(const PitchPair& x, const PitchPair& y) {
    return x.lo == y.lo && x.hi == y.hi;
  }
};

inline std::string pair_label(PitchPair p) {
  return std::string(pitch_class_name(p.lo)) + "-" + pitch_class_name(p.hi);
}

struct IntervalGroup {
  std::string label;
  std::vector<PitchPair> members;
};

// A partition of unordered pitch-class pairs into labeled groups; the
// observable state alphabet of the decision process.
class GroupSet {
 public:
  explicit GroupSet(std::vector<IntervalGroup> groups)
      : groups_(std::move(groups)) {
    lookup_.fill(-1);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      for (const PitchPair& p : groups_[gi].members) {
        int& slot = lookup_[slot_index(p)];
        if (slot >= 0)
          throw std::invalid_argument(
              "interval groups overlap: pair " + pair_label(p) +
              " appears in '" + groups_[slot].label + "' and '" +
              groups_[gi].label + "'");
        slot = static_cast<int>(gi);
      }
    }
  }

  std::size_t size() const { return groups_.size(); }
  const IntervalGroup& group(std::size_t i) const { return groups_.at(i); }
  const std::vector<IntervalGroup>& groups() const { return groups_; }

  bool covers(PitchPair p) const { return lookup_[slot_index(p)] >= 0; }

  int index_of(PitchPair p) const {
    const int gi = lookup_[slot_index(p)];
    if (gi < 0)
      throw std::out_of_range("pitch pair " + pair_label(p) +
                              " is not covered by any interval group");
    return gi;
  }

  std::size_t covered_pair_count() const {
    std::size_t n = 0;
    for (int v : lookup_)
      if (v >= 0) ++n;
    return n;
  }

 private:
  static std::size_t slot_index(PitchPair p) {
    return static_cast<std::size_t>(static_cast<int>(p.lo)) * kPitchClassCount +
           static_cast<std::size_t>(static_cast<int>(p.hi));
  }

  std::vector<IntervalGroup> groups_;
  std::array<int, kPitchClassCount * kPitchClassCount> lookup_{};
};

inline const IntervalGroup& interval_group_of(PitchPair pair,
                                              const GroupSet& groups) {
  return groups.group(static_cast<std::size_t>(groups.index_of(pair)));
}

// Default partition of all 78 unordered pitch-class pairs: each of the 66
// distinct pairs is its own group (so the A-E / F-B / D-G groups exist
// verbatim) and the 12 unisons share one dedicated group.
inline GroupSet default_interval_groups() {
  std::vector<IntervalGroup> groups;
  IntervalGroup unison{"unison", {}};
  for (int pc = 0; pc < kPitchClassCount; ++pc)
    unison.members.emplace_back(static_cast<PitchClass>(pc),
                                static_cast<PitchClass>(pc));
  groups.push_back(std::move(unison));

  for (int a = 0; a < kPitchClassCount; ++a) {
    for (int b = a + 1; b < kPitchClassCount; ++b) {
      PitchPair p(static_cast<PitchClass>(a), static_cast<PitchClass>(b));
      std::string label = pair_label(p);
      // keep the canonical spelling for the three groups named in the
      // default configuration
      if (p == PitchPair(PitchClass::A, PitchClass::E)) label = "A-E";
      if (p == PitchPair(PitchClass::F, PitchClass::B)) label = "F-B";
      if (p == PitchPair(PitchClass::D, PitchClass::G)) label = "D-G";
      groups.push_back({std::move(label), {p}});
    }
  }
  return GroupSet(std::move(groups));
}

}  // namespace sightread
