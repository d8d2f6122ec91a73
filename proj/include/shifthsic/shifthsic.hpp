#pragma once

#include "shifthsic/analysis.hpp"
#include "shifthsic/error.hpp"
#include "shifthsic/experiments.hpp"
#include "shifthsic/ingest.hpp"
#include "shifthsic/kernels.hpp"
#include "shifthsic/methods.hpp"
#include "shifthsic/nulldist.hpp"
#include "shifthsic/statistic.hpp"
#include "shifthsic/synth.hpp"
