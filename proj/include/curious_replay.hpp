#pragma once

#include "curious_replay/agent.hpp"
#include "curious_replay/config.hpp"
#include "curious_replay/envs.hpp"
#include "curious_replay/errors.hpp"
#include "curious_replay/harness.hpp"
#include "curious_replay/metrics.hpp"
#include "curious_replay/priority.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/report.hpp"
#include "curious_replay/rng.hpp"
#include "curious_replay/snapshot.hpp"
#include "curious_replay/stats.hpp"
#include "curious_replay/sumtree.hpp"
#include "curious_replay/textio.hpp"
#include "curious_replay/transition.hpp"
#include "curious_replay/value_table.hpp"
#include "curious_replay/world_model.hpp"
