#pragma once

/// \file risopt.hpp
/// \brief Umbrella header for the RIS phase optimisation library.

#include "common.hpp"
#include "linalg.hpp"
#include "config.hpp"
#include "channel.hpp"
#include "transceiver.hpp"
#include "metrics.hpp"
#include "priors.hpp"
#include "idbp.hpp"
#include "baselines.hpp"
#include "harness.hpp"
#include "acceptance.hpp"
