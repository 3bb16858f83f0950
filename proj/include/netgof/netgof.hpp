#pragma once

#include "netgof/types.hpp"
#include "netgof/network.hpp"
#include "netgof/distance.hpp"
#include "netgof/process.hpp"
#include "netgof/random.hpp"
#include "netgof/quadrature.hpp"
#include "netgof/simulate.hpp"
#include "netgof/adoption.hpp"
#include "netgof/torus.hpp"
#include "netgof/partition.hpp"
#include "netgof/mixing.hpp"
#include "netgof/kernel.hpp"
#include "netgof/likelihood.hpp"
#include "netgof/goftest.hpp"
#include "netgof/bandwidth.hpp"
#include "netgof/scenario.hpp"
#include "netgof/io.hpp"
