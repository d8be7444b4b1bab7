// Umbrella header.
#pragma once

#include "wsnfuse/bounds.hpp"
#include "wsnfuse/channel.hpp"
#include "wsnfuse/deployment.hpp"
#include "wsnfuse/errors.hpp"
#include "wsnfuse/fusion.hpp"
#include "wsnfuse/matrix.hpp"
#include "wsnfuse/power.hpp"
#include "wsnfuse/quadrature.hpp"
#include "wsnfuse/rng.hpp"
#include "wsnfuse/sensing.hpp"
