#pragma once

#include "ptzlm/bootstrap.hpp"
#include "ptzlm/camera_state.hpp"
#include "ptzlm/command.hpp"
#include "ptzlm/common.hpp"
#include "ptzlm/datagen.hpp"
#include "ptzlm/error.hpp"
#include "ptzlm/gateway.hpp"
#include "ptzlm/geometry.hpp"
#include "ptzlm/harness.hpp"
#include "ptzlm/instance.hpp"
#include "ptzlm/metrics.hpp"
#include "ptzlm/parser.hpp"
#include "ptzlm/prompt.hpp"
#include "ptzlm/scene.hpp"
#include "ptzlm/service.hpp"
#include "ptzlm/simulator.hpp"
#include "ptzlm/synth.hpp"
