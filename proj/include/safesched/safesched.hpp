#pragma once

// Safe scheduler synthesis for stochastic hard/soft-deadline request systems.

#include "safesched/error.hpp"
#include "safesched/prob_vec.hpp"
#include "safesched/model.hpp"
#include "safesched/transition.hpp"
#include "safesched/mdp.hpp"
#include "safesched/safety.hpp"
#include "safesched/solve.hpp"
#include "safesched/learn.hpp"
#include "safesched/io.hpp"
#include "safesched/harness.hpp"
