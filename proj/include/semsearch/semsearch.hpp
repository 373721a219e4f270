#pragma once

#include "semsearch/core/error.hpp"
#include "semsearch/core/grid.hpp"
#include "semsearch/core/json_util.hpp"
#include "semsearch/core/rng.hpp"
#include "semsearch/scenario.hpp"
#include "semsearch/sim.hpp"
#include "semsearch/topo.hpp"
#include "semsearch/semantics.hpp"
#include "semsearch/expert.hpp"
#include "semsearch/learn.hpp"
#include "semsearch/planner.hpp"
#include "semsearch/episode.hpp"
#include "semsearch/eval.hpp"
#include "semsearch/bridge.hpp"
#include "semsearch/config.hpp"
