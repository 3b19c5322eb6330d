#include "ats/error.hpp"

namespace ats {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Malformed: return "malformed";
    case ErrorKind::Invalid: return "invalid";
    case ErrorKind::NotFound: return "not_found";
    case ErrorKind::Forbidden: return "forbidden";
    case ErrorKind::Unauthorized: return "unauthorized";
    case ErrorKind::NoData: return "no_data";
    case ErrorKind::Config: return "config";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

}  // namespace ats
