#pragma once

#include "grid5g/bridge.hpp"
#include "grid5g/channel.hpp"
#include "grid5g/cli.hpp"
#include "grid5g/engine.hpp"
#include "grid5g/errors.hpp"
#include "grid5g/metrics.hpp"
#include "grid5g/power_ctrl.hpp"
#include "grid5g/presets.hpp"
#include "grid5g/ran_sched.hpp"
#include "grid5g/scenario.hpp"
#include "grid5g/scenario_file.hpp"
#include "grid5g/trace.hpp"
