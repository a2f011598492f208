#pragma once

#include "core.hpp"
#include "rng.hpp"
#include "heavytail.hpp"
#include "grid.hpp"
#include "renewal.hpp"
#include "kernels.hpp"
#include "payoff.hpp"
#include "potentials.hpp"
#include "simulator.hpp"
#include "asymptotics.hpp"
#include "scenario.hpp"
#include "plot.hpp"
