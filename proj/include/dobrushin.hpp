#pragma once

#include "dobrushin/error.hpp"
#include "dobrushin/summation.hpp"
#include "dobrushin/kernel.hpp"
#include "dobrushin/schedule.hpp"
#include "dobrushin/families.hpp"
#include "dobrushin/rng.hpp"
#include "dobrushin/stats.hpp"
#include "dobrushin/exact.hpp"
#include "dobrushin/monte_carlo.hpp"
#include "dobrushin/io.hpp"
