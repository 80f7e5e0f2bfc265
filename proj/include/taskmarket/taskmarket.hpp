#pragma once

#include "taskmarket/error.hpp"
#include "taskmarket/model.hpp"
#include "taskmarket/rng.hpp"
#include "taskmarket/assignment.hpp"
#include "taskmarket/cutoff.hpp"
#include "taskmarket/metrics.hpp"
#include "taskmarket/classifier.hpp"
#include "taskmarket/econometrics.hpp"
#include "taskmarket/synthgen.hpp"
