#pragma once

#include "utpcr/analysis.hpp"
#include "utpcr/config.hpp"
#include "utpcr/dataset.hpp"
#include "utpcr/error.hpp"
#include "utpcr/grpo.hpp"
#include "utpcr/judge.hpp"
#include "utpcr/parser.hpp"
#include "utpcr/rational.hpp"
#include "utpcr/reward.hpp"
#include "utpcr/schema.hpp"
#include "utpcr/scoring.hpp"
#include "utpcr/task.hpp"
#include "utpcr/trajectory.hpp"
#include "utpcr/validate.hpp"
