#pragma once

#include <stdexcept>
#include <string>

namespace trusdn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TRUSDN_ERROR(Name)                                          \
  struct Name : Error {                                             \
    Name() : Error(#Name) {}                                        \
    explicit Name(const std::string& what) : Error(what) {}         \
  }

TRUSDN_ERROR(WrongKeyRole);
TRUSDN_ERROR(NonceExhausted);
TRUSDN_ERROR(MessageTooLong);
TRUSDN_ERROR(InvalidBase);
TRUSDN_ERROR(UnverifiedInput);
TRUSDN_ERROR(DuplicateQuotingEnclave);
TRUSDN_ERROR(CrossPlatformReport);
TRUSDN_ERROR(IsolationViolation);
TRUSDN_ERROR(ReportRejected);
TRUSDN_ERROR(UnauthorizedVerifier);
TRUSDN_ERROR(NoSuchSwitch);
TRUSDN_ERROR(UnknownPeer);
TRUSDN_ERROR(BufferOverflow);
TRUSDN_ERROR(TopologyError);
TRUSDN_ERROR(ParseError);
TRUSDN_ERROR(IoError);

#undef TRUSDN_ERROR

}  // namespace trusdn
