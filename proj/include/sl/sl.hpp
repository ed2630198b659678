#pragma once

// Umbrella header.

#include "sl/bench.hpp"
#include "sl/common.hpp"
#include "sl/csv.hpp"
#include "sl/dataset.hpp"
#include "sl/folds.hpp"
#include "sl/forest.hpp"
#include "sl/gradboost.hpp"
#include "sl/lasso.hpp"
#include "sl/learners.hpp"
#include "sl/mars.hpp"
#include "sl/matrix.hpp"
#include "sl/meta.hpp"
#include "sl/metrics.hpp"
#include "sl/rng.hpp"
#include "sl/screens.hpp"
#include "sl/simulate.hpp"
#include "sl/stats.hpp"
#include "sl/superlearner.hpp"
#include "sl/tree.hpp"
