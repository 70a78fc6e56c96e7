#pragma once

#include "possq/core/errors.hpp"
#include "possq/core/gaussian_possibility.hpp"
#include "possq/core/particle_set.hpp"
#include "possq/core/random.hpp"
#include "possq/core/water_pour.hpp"
#include "possq/filters/possibility_pf.hpp"
#include "possq/filters/standard_pf.hpp"
#include "possq/filters/step_record.hpp"
#include "possq/filters/transition.hpp"
#include "possq/tma/crlb.hpp"
#include "possq/tma/models.hpp"
#include "possq/bench/noise.hpp"
#include "possq/bench/runner.hpp"
#include "possq/bench/scenario.hpp"
#include "possq/bench/stats.hpp"
#include "possq/bench/table1.hpp"
