#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <utility>

namespace mecorch {

/// String identifier tagged with the domain it belongs to, so a host id
/// cannot be passed where a vehicle id is expected.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {}
  explicit Id(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

 private:
  std::string value_;
};

struct HostTag {};
struct VehicleTag {};

using HostId = Id<HostTag>;
using VehicleId = Id<VehicleTag>;

}  // namespace mecorch

template <class Tag>
struct std::hash<mecorch::Id<Tag>> {
  std::size_t operator()(const mecorch::Id<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
