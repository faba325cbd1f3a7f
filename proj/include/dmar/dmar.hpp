#pragma once

#include "agent.hpp"
#include "core.hpp"
#include "engine.hpp"
#include "execution.hpp"
#include "grid.hpp"
#include "harness.hpp"
#include "instance.hpp"
#include "lma.hpp"
#include "local_map.hpp"
#include "params.hpp"
#include "planner.hpp"
#include "rng.hpp"
#include "soac.hpp"
