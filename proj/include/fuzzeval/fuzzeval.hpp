#pragma once

#include "bench_props.hpp"
#include "bootstrap.hpp"
#include "data_model.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "random.hpp"
#include "ranking.hpp"
#include "regression.hpp"
#include "report.hpp"
#include "stats.hpp"
#include "synth.hpp"
