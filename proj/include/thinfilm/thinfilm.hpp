#pragma once

#include "thinfilm/appendix_a.hpp"
#include "thinfilm/config.hpp"
#include "thinfilm/diagnostics.hpp"
#include "thinfilm/io.hpp"
#include "thinfilm/physics.hpp"
#include "thinfilm/quasistatic.hpp"
#include "thinfilm/time_stepper.hpp"
#include "thinfilm/transient.hpp"
