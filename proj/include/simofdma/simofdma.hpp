#pragma once

// Umbrella header for the SIM-assisted OFDMA link simulator.

#include "simofdma/allocation.hpp"
#include "simofdma/channel.hpp"
#include "simofdma/common.hpp"
#include "simofdma/config.hpp"
#include "simofdma/evaluation.hpp"
#include "simofdma/io.hpp"
#include "simofdma/joint.hpp"
#include "simofdma/phase_opt.hpp"
#include "simofdma/sim_stack.hpp"
#include "simofdma/sweeps.hpp"
