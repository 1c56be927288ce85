#pragma once

#include <uavrelay/baselines.hpp>
#include <uavrelay/channel.hpp>
#include <uavrelay/conic.hpp>
#include <uavrelay/core.hpp>
#include <uavrelay/experiment.hpp>
#include <uavrelay/geometry.hpp>
#include <uavrelay/lagrangian.hpp>
#include <uavrelay/power.hpp>
#include <uavrelay/sca.hpp>
#include <uavrelay/scenario.hpp>
