// qdephase.hpp - Umbrella header for the qdephase library.

#pragma once

#include "qdephase/model.hpp"
#include "qdephase/trace.hpp"
#include "qdephase/exact_sim.hpp"
#include "qdephase/analytic.hpp"
#include "qdephase/classical.hpp"
#include "qdephase/open_system.hpp"
#include "qdephase/estimator.hpp"
#include "qdephase/io.hpp"
#include "qdephase/scenario.hpp"
