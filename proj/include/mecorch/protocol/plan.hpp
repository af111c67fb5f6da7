#pragma once

#include <map>
#include <optional>
#include <string>

#include "mecorch/error.hpp"
#include "mecorch/ids.hpp"

namespace mecorch {

enum class Trigger { QosDegradation, OutOfArea, UpfReattach };

inline const char* to_string(Trigger t) {
  switch (t) {
    case Trigger::QosDegradation: return "QosDegradation";
    case Trigger::OutOfArea: return "OutOfArea";
    case Trigger::UpfReattach: return "UpfReattach";
  }
  return "?";
}

inline Trigger trigger_from_string(const std::string& s) {
  if (s == "QosDegradation") return Trigger::QosDegradation;
  if (s == "OutOfArea") return Trigger::OutOfArea;
  if (s == "UpfReattach") return Trigger::UpfReattach;
  throw InputError("unknown trigger '" + s + "'");
}

/// Decision to move one vehicle's application context. source != target.
struct RelocationPlan {
  double time = 0.0;
  VehicleId vehicle;
  HostId source;
  HostId target;
  Trigger trigger = Trigger::QosDegradation;
  /// Closeness of every ranked host at decision time.
  std::map<HostId, double> closeness;
};

}  // namespace mecorch
