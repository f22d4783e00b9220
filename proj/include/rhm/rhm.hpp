#pragma once

// Umbrella header for the wheel-health monitoring library.

#include "rhm/checkpoint.hpp"
#include "rhm/config.hpp"
#include "rhm/contrastive.hpp"
#include "rhm/detection.hpp"
#include "rhm/encoders.hpp"
#include "rhm/error.hpp"
#include "rhm/evaluation.hpp"
#include "rhm/grad_check.hpp"
#include "rhm/helm.hpp"
#include "rhm/io/csv.hpp"
#include "rhm/io/dataset.hpp"
#include "rhm/io/svg.hpp"
#include "rhm/network.hpp"
#include "rhm/ocsvm.hpp"
#include "rhm/optimizer.hpp"
#include "rhm/pipeline.hpp"
#include "rhm/rng.hpp"
#include "rhm/signal_prep.hpp"
#include "rhm/tensor.hpp"
#include "rhm/timeline.hpp"
#include "rhm/toydata.hpp"
#include "rhm/wheelsim.hpp"
