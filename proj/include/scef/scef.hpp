#pragma once

// Umbrella header for the SCEF library.

#include "scef/checkpoint.hpp"
#include "scef/complexity.hpp"
#include "scef/compressor.hpp"
#include "scef/config.hpp"
#include "scef/conv.hpp"
#include "scef/dataset.hpp"
#include "scef/errors.hpp"
#include "scef/layers.hpp"
#include "scef/linalg.hpp"
#include "scef/network.hpp"
#include "scef/npy.hpp"
#include "scef/objective.hpp"
#include "scef/rank_analysis.hpp"
#include "scef/reports.hpp"
#include "scef/schedules.hpp"
#include "scef/serialize.hpp"
#include "scef/tensor.hpp"
#include "scef/trainer.hpp"
