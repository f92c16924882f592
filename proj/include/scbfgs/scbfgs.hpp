#pragma once

// Umbrella header.

#include "scbfgs/bench.hpp"
#include "scbfgs/bfgs.hpp"
#include "scbfgs/diagnostics.hpp"
#include "scbfgs/errors.hpp"
#include "scbfgs/matrix.hpp"
#include "scbfgs/objective.hpp"
#include "scbfgs/rng.hpp"
#include "scbfgs/theory.hpp"
#include "scbfgs/wolfe.hpp"
