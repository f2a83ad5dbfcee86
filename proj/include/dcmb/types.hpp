#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dcmb {

/// Simulation time. One tick is one simulated hour by convention.
using Tick = std::uint64_t;

using ParticipantId = std::string;

enum class Role { MachineOwner, MachineManufacturer, Validator, Sequencer, Auditor };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

enum class CertificationStatus { Pending, Certified, Rejected };

std::string_view to_string(CertificationStatus s);
CertificationStatus certification_status_from_string(std::string_view s);

}  // namespace dcmb
