#pragma once

#include "grassbot/camera.hpp"
#include "grassbot/frame_io.hpp"
#include "grassbot/geometry.hpp"
#include "grassbot/harness.hpp"
#include "grassbot/localization.hpp"
#include "grassbot/navigation.hpp"
#include "grassbot/perception.hpp"
#include "grassbot/rng.hpp"
#include "grassbot/scenario.hpp"
#include "grassbot/trace_io.hpp"
#include "grassbot/tracker.hpp"
#include "grassbot/world.hpp"
