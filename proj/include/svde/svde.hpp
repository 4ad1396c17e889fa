#pragma once

// Umbrella header for the singular-Volterra numerical laboratory: power
// series kernels, Euler/Picard solvers, the Girsanov weak estimator,
// derivative (Malliavin/flow) equations, mollification studies, and the
// experiment layer behind the command line tool.

#include "svde/algebra.hpp"
#include "svde/brownian.hpp"
#include "svde/experiment.hpp"
#include "svde/field.hpp"
#include "svde/girsanov.hpp"
#include "svde/grid.hpp"
#include "svde/integrals.hpp"
#include "svde/kernel.hpp"
#include "svde/mollify.hpp"
#include "svde/parallel.hpp"
#include "svde/presets.hpp"
#include "svde/rng.hpp"
#include "svde/sensitivity.hpp"
#include "svde/solver.hpp"
#include "svde/stats.hpp"
