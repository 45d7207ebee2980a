#ifndef MSORTE_CERTIFICATE_HPP
#define MSORTE_CERTIFICATE_HPP

#include <string>

#include "msorte/equilibrium.hpp"
#include "msorte/types.hpp"

namespace msorte {

inline constexpr const char* kCertificateVersion = "1.0";

/// Canonical serialization: fixed key order, %.17g floats, no whitespace
/// variation — identical certificates are byte-identical.
std::string certificate_to_json(const EquilibriumCertificate& cert);

/// Parses a certificate against the scenario space it was produced on (the
/// pricing rows are re-validated as densities). Throws InputError on schema
/// mismatch.
EquilibriumCertificate certificate_from_json(const std::string& text, const ScenarioSpace& space);

/// FNV-1a of the raw bytes, hex encoded; stable across platforms unlike
/// std::hash.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace msorte

#endif
