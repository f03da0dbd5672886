#pragma once

#include "labelnoise/config.hpp"
#include "labelnoise/csv.hpp"
#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/estimators.hpp"
#include "labelnoise/evaluation.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/ingest.hpp"
#include "labelnoise/mitigation.hpp"
#include "labelnoise/noise_channel.hpp"
#include "labelnoise/plot.hpp"
#include "labelnoise/rng.hpp"
#include "labelnoise/simplex.hpp"
#include "labelnoise/sweep.hpp"
