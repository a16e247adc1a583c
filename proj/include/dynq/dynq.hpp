#pragma once

// Umbrella header for the whole library: toy MDPs, the exact solver, the
// neural learner with replay and target network, hyperparameter schedules,
// and the experiment harness.

#include "agent.hpp"      // IWYU pragma: export
#include "config.hpp"     // IWYU pragma: export
#include "exact_dp.hpp"   // IWYU pragma: export
#include "harness.hpp"    // IWYU pragma: export
#include "mdp.hpp"        // IWYU pragma: export
#include "network.hpp"    // IWYU pragma: export
#include "optimizer.hpp"  // IWYU pragma: export
#include "replay.hpp"     // IWYU pragma: export
#include "rng.hpp"        // IWYU pragma: export
#include "schedule.hpp"   // IWYU pragma: export
