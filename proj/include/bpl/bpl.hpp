#pragma once

#include "bpl/model.hpp"
#include "bpl/schedule.hpp"
#include "bpl/foata.hpp"
#include "bpl/hazardsim.hpp"
#include "bpl/pipesim.hpp"
#include "bpl/sweep.hpp"
