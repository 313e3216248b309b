#pragma once

// Continual-learning engine with regression (negative-flip) accounting:
// train a sparse-input classifier across an experience stream, measure
// prediction flips between consecutive model versions, and mitigate them by
// composing a focal logit-matching penalty with standard CL strategies.

#include "regcl/config.hpp"
#include "regcl/dataset.hpp"
#include "regcl/engine.hpp"
#include "regcl/errors.hpp"
#include "regcl/harness.hpp"
#include "regcl/metrics.hpp"
#include "regcl/mlp.hpp"
#include "regcl/pct.hpp"
#include "regcl/rng.hpp"
#include "regcl/scenario.hpp"
#include "regcl/snapshot.hpp"
#include "regcl/strategies.hpp"
#include "regcl/synth.hpp"
