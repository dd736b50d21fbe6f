#pragma once

// Everything in one include.

#include "canav/config.hpp"
#include "canav/csm.hpp"
#include "canav/errors.hpp"
#include "canav/generator.hpp"
#include "canav/grid.hpp"
#include "canav/instruction.hpp"
#include "canav/metrics.hpp"
#include "canav/navigator.hpp"
#include "canav/oracle_perception.hpp"
#include "canav/perception.hpp"
#include "canav/planner.hpp"
#include "canav/remote_perception.hpp"
#include "canav/runner.hpp"
#include "canav/simulator.hpp"
#include "canav/snapshot.hpp"
#include "canav/value_map.hpp"
#include "canav/waypoint.hpp"
#include "canav/world.hpp"
