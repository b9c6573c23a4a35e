#pragma once

#include "finite_difference.hpp"

namespace srmpc::testing {

using oracle::fd_jacobian;
using oracle::max_rel_err;
using oracle::rel_err;

}  // namespace srmpc::testing
