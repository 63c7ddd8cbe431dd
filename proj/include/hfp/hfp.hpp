#pragma once

// Umbrella header for the multi-die heterogeneous floorplanning library.

#include "hfp/bstar_tree.hpp"
#include "hfp/dense_net.hpp"
#include "hfp/die_assign.hpp"
#include "hfp/error.hpp"
#include "hfp/experiment.hpp"
#include "hfp/floorplan.hpp"
#include "hfp/generator.hpp"
#include "hfp/io.hpp"
#include "hfp/model.hpp"
#include "hfp/orchestrator.hpp"
#include "hfp/partition.hpp"
#include "hfp/ppo.hpp"
#include "hfp/random.hpp"
#include "hfp/sa.hpp"
#include "hfp/svg.hpp"
