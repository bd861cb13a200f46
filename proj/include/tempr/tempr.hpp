#pragma once

#include "tempr/eval.hpp"
#include "tempr/grpo.hpp"
#include "tempr/interval.hpp"
#include "tempr/matching.hpp"
#include "tempr/output_parser.hpp"
#include "tempr/reward.hpp"
#include "tempr/task.hpp"
#include "tempr/toy_policy.hpp"
