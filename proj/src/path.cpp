#include "xke/path.hpp"

#include "xke/error.hpp"

namespace xke {

namespace {
std::uint32_t pack(PathStep s) {
  return (static_cast<std::uint32_t>(s.relation) << 1) | (s.direction == Direction::kInverse ? 1U : 0U);
}
}  // namespace

PathType::PathType(std::initializer_list<PathStep> steps) {
  for (const auto& s : steps) push_back(s);
}

void PathType::push_back(PathStep s) {
  if (length_ >= kMaxSteps) throw Error("path type longer than " + std::to_string(kMaxSteps) + " steps");
  packed_[length_++] = pack(s);
}

PathType PathType::extended(PathStep s) const {
  PathType p = *this;
  p.push_back(s);
  return p;
}

PathType PathType::inverse() const {
  PathType p;
  for (std::size_t i = length_; i > 0; --i) p.packed_[p.length_++] = packed_[i - 1] ^ 1U;
  return p;
}

PathType PathType::concat(const PathType& other) const {
  if (length_ + other.length_ > kMaxSteps) throw Error("concatenated path type too long");
  PathType p = *this;
  for (std::size_t i = 0; i < other.length_; ++i) p.packed_[p.length_++] = other.packed_[i];
  return p;
}

std::string PathType::to_string(const Vocabulary& relations) const {
  std::string out = "-";
  for (std::size_t i = 0; i < length_; ++i) {
    const PathStep s = step(i);
    out += relations.name(s.relation);
    if (s.direction == Direction::kInverse) out += kInverseMark;
    out += '-';
  }
  return out;
}

PathType PathType::parse(std::string_view text, const Vocabulary& relations) {
  if (text.size() < 2 || text.front() != '-' || text.back() != '-') {
    throw UserError("malformed path type '" + std::string(text) + "'");
  }
  PathType p;
  std::size_t pos = 1;
  while (pos < text.size()) {
    // Relation names may themselves contain '-', so try the longest segment
    // that names a known relation.
    bool matched = false;
    for (std::size_t end = text.size() - 1; end > pos && !matched; --end) {
      if (text[end] != '-') continue;
      std::string_view token = text.substr(pos, end - pos);
      Direction dir = Direction::kForward;
      if (token.size() > kInverseMark.size() && token.ends_with(kInverseMark)) {
        token.remove_suffix(kInverseMark.size());
        dir = Direction::kInverse;
      }
      if (auto id = relations.find(token)) {
        p.push_back({*id, dir});
        pos = end + 1;
        matched = true;
      }
    }
    if (!matched) throw UserError("path type '" + std::string(text) + "' names an unknown relation");
  }
  return p;
}

std::uint64_t PathType::hash() const {
  std::uint64_t h = length_;
  for (std::size_t i = 0; i < length_; ++i) h = Rng::splitmix(h ^ (static_cast<std::uint64_t>(packed_[i]) << 8));
  return h;
}

}  // namespace xke
