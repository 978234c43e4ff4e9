#include "kinopax/types.hpp"

namespace kinopax {

std::string_view to_string(PlanStatus status) noexcept {
  switch (status) {
    case PlanStatus::Solved: return "Solved";
    case PlanStatus::Timeout: return "Timeout";
    case PlanStatus::CapacityExhausted: return "CapacityExhausted";
    case PlanStatus::Error: return "Error";
  }
  return "Error";
}

PlanStatus plan_status_from_string(std::string_view name) {
  for (PlanStatus s : {PlanStatus::Solved, PlanStatus::Timeout, PlanStatus::CapacityExhausted, PlanStatus::Error})
    if (to_string(s) == name) return s;
  throw Error(ErrorKind::Config, "unknown plan status '" + std::string(name) + "'");
}

}  // namespace kinopax
