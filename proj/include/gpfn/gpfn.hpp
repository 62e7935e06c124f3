// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gpfn/belief.hpp"
#include "gpfn/checkpoint.hpp"
#include "gpfn/config.hpp"
#include "gpfn/dataset.hpp"
#include "gpfn/error.hpp"
#include "gpfn/feature_extractor.hpp"
#include "gpfn/metrics.hpp"
#include "gpfn/optimizer.hpp"
#include "gpfn/pipeline.hpp"
#include "gpfn/predictor.hpp"
#include "gpfn/proximal.hpp"
#include "gpfn/sample_set.hpp"
#include "gpfn/samplers.hpp"
#include "gpfn/trainer.hpp"
