#pragma once

#include "impflow/entropy.hpp"
#include "impflow/errors.hpp"
#include "impflow/examples.hpp"
#include "impflow/hits.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/quotient.hpp"
#include "impflow/sampling.hpp"
#include "impflow/spaces.hpp"
#include "impflow/timefns.hpp"

namespace impflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace impflow
