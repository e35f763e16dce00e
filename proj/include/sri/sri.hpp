/// @file
/// @brief Umbrella header.
#pragma once

#include "sri/certify.hpp"
#include "sri/core.hpp"
#include "sri/dynamics.hpp"
#include "sri/experiment.hpp"
#include "sri/geometry.hpp"
#include "sri/harness.hpp"
#include "sri/oracles.hpp"
#include "sri/problems.hpp"
#include "sri/random.hpp"
#include "sri/report.hpp"
