#pragma once

// Umbrella header: the whole day-ahead load forecasting toolkit.

#include "loadcast/adam.hpp"
#include "loadcast/backtest.hpp"
#include "loadcast/checkpoint.hpp"
#include "loadcast/features.hpp"
#include "loadcast/gradcheck.hpp"
#include "loadcast/hours.hpp"
#include "loadcast/kmeans.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/model.hpp"
#include "loadcast/pipeline.hpp"
#include "loadcast/report.hpp"
#include "loadcast/runconfig.hpp"
#include "loadcast/series.hpp"
#include "loadcast/svg.hpp"
#include "loadcast/synth.hpp"
#include "loadcast/tape.hpp"
#include "loadcast/tensor.hpp"
#include "loadcast/train.hpp"
