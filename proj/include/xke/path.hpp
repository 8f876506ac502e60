#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "xke/graph.hpp"

namespace xke {

struct PathStep {
  RelationId relation = 0;
  Direction direction = Direction::kForward;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

// A signed relation sequence -r1-r2^-1-...: the body of a Horn rule. Steps are
// packed as (relation << 1 | inverse) into a fixed array; unused slots are 0.
class PathType {
 public:
  static constexpr std::size_t kMaxSteps = 8;

  PathType() = default;
  PathType(std::initializer_list<PathStep> steps);

  std::size_t length() const { return length_; }
  bool empty() const { return length_ == 0; }
  PathStep step(std::size_t i) const {
    return {static_cast<RelationId>(packed_[i] >> 1), (packed_[i] & 1U) ? Direction::kInverse : Direction::kForward};
  }

  // Returns a copy extended by one step. Length must stay <= kMaxSteps.
  PathType extended(PathStep s) const;
  void push_back(PathStep s);

  // Reverses the order and flips every direction: a path from x to y becomes
  // the path from y to x.
  PathType inverse() const;

  // this followed by other.
  PathType concat(const PathType& other) const;

  std::string to_string(const Vocabulary& relations) const;
  // Inverse of to_string; relation names are matched against `relations`.
  static PathType parse(std::string_view text, const Vocabulary& relations);

  std::uint64_t hash() const;

  friend auto operator<=>(const PathType& a, const PathType& b) {
    if (auto c = a.length_ <=> b.length_; c != 0) return c;
    return a.packed_ <=> b.packed_;
  }
  friend bool operator==(const PathType&, const PathType&) = default;

 private:
  std::array<std::uint32_t, kMaxSteps> packed_{};
  std::uint8_t length_ = 0;
};

struct PathTypeHash {
  std::size_t operator()(const PathType& p) const noexcept { return static_cast<std::size_t>(p.hash()); }
};

inline constexpr std::string_view kInverseMark = "⁻¹";  // superscript -1

}  // namespace xke
