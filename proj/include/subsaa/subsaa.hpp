#pragma once

#include "analytics.hpp"
#include "cli.hpp"
#include "estimators.hpp"
#include "experiments.hpp"
#include "linalg.hpp"
#include "problems.hpp"
#include "report_io.hpp"
#include "rng.hpp"
#include "samples.hpp"
#include "special.hpp"
#include "version.hpp"
