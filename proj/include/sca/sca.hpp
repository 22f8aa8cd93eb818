#pragma once

#include <sca/bench.hpp>
#include <sca/core.hpp>
#include <sca/data_io.hpp>
#include <sca/h2sisal.hpp>
#include <sca/linalg.hpp>
#include <sca/metrics.hpp>
#include <sca/numeric.hpp>
#include <sca/pipeline.hpp>
#include <sca/preprocessing.hpp>
#include <sca/prsisal.hpp>
#include <sca/report.hpp>
#include <sca/rng.hpp>
#include <sca/sisal.hpp>
#include <sca/svg.hpp>
#include <sca/synthetic.hpp>
#include <sca/vertex_init.hpp>
