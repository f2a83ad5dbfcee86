#include "dcmb/types.hpp"

#include <string>

#include "dcmb/errors.hpp"

namespace dcmb {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::MachineOwner: return "machine_owner";
    case Role::MachineManufacturer: return "machine_manufacturer";
    case Role::Validator: return "validator";
    case Role::Sequencer: return "sequencer";
    case Role::Auditor: return "auditor";
  }
  return "unknown";
}

Role role_from_string(std::string_view s) {
  for (Role r : {Role::MachineOwner, Role::MachineManufacturer, Role::Validator, Role::Sequencer, Role::Auditor})
    if (to_string(r) == s) return r;
  throw Error(ErrorCode::ConfigInvalid, "unknown role '" + std::string(s) + "'");
}

std::string_view to_string(CertificationStatus s) {
  switch (s) {
    case CertificationStatus::Pending: return "pending";
    case CertificationStatus::Certified: return "certified";
    case CertificationStatus::Rejected: return "rejected";
  }
  return "unknown";
}

CertificationStatus certification_status_from_string(std::string_view s) {
  if (s == "pending") return CertificationStatus::Pending;
  if (s == "certified") return CertificationStatus::Certified;
  if (s == "rejected") return CertificationStatus::Rejected;
  throw Error(ErrorCode::ParseError, "unknown certification status '" + std::string(s) + "'");
}

}  // namespace dcmb
