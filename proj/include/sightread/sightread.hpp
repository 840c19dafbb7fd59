#pragma once

#include "sightread/config.hpp"
#include "sightread/constraints.hpp"
#include "sightread/experiment.hpp"
#include "sightread/intervals.hpp"
#include "sightread/learner.hpp"
#include "sightread/notes.hpp"
#include "sightread/pomdp.hpp"
#include "sightread/rate_solver.hpp"
#include "sightread/rng.hpp"
