#pragma once

// Core library: environments, policies, rollouts, advantages, training, exact
// oracles and diagnostics. The app/ headers (config files, run directories,
// JSON rollout logs) are separate because they pull in nlohmann_json.

#include "anytime/advantage/brpo.hpp"
#include "anytime/core/budget.hpp"
#include "anytime/core/errors.hpp"
#include "anytime/core/parallel.hpp"
#include "anytime/core/rng.hpp"
#include "anytime/core/types.hpp"
#include "anytime/diagnostics/accuracy.hpp"
#include "anytime/diagnostics/diagnostics.hpp"
#include "anytime/envs/environment.hpp"
#include "anytime/envs/needle_search.hpp"
#include "anytime/envs/scripted.hpp"
#include "anytime/envs/scripted_io.hpp"
#include "anytime/oracle/enumeration.hpp"
#include "anytime/policy/checkpoint.hpp"
#include "anytime/policy/linear_softmax.hpp"
#include "anytime/rollout/rollout.hpp"
#include "anytime/trainer/gradients.hpp"
#include "anytime/trainer/length_penalty.hpp"
#include "anytime/trainer/optimizer.hpp"
#include "anytime/trainer/training.hpp"
