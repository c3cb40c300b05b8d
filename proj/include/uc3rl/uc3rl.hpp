#pragma once

#include "uc3rl/algorithm.hpp"
#include "uc3rl/analysis.hpp"
#include "uc3rl/cmdp.hpp"
#include "uc3rl/function_classes.hpp"
#include "uc3rl/mdp.hpp"
#include "uc3rl/oracles.hpp"
#include "uc3rl/random_models.hpp"
#include "uc3rl/rng.hpp"
#include "uc3rl/tables.hpp"
