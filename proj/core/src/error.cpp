#include "ctst/error.hpp"

namespace ctst {

BackendError::BackendError(int status, std::string body_excerpt)
    : Error("backend returned HTTP " + std::to_string(status) + ": " + body_excerpt),
      status_(status),
      body_excerpt_(std::move(body_excerpt)) {}

}  // namespace ctst
