#include "momcert/error.hpp"

namespace momcert {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::InvalidSet: return "InvalidSet";
    case ErrorKind::KappaOne: return "KappaOne";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NoCertificate: return "NoCertificate";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NoiseTooLarge: return "NoiseTooLarge";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::DegenerateWeight: return "DegenerateWeight";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::Diverged: return "Diverged";
  }
  return "Unknown";
}

}  // namespace momcert
