// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header for the whole library.
#include "adfp/builtin_registry.hpp"
#include "adfp/classifier.hpp"
#include "adfp/collect_service.hpp"
#include "adfp/countermeasures.hpp"
#include "adfp/csv.hpp"
#include "adfp/encoder.hpp"
#include "adfp/error.hpp"
#include "adfp/fingerprint.hpp"
#include "adfp/gbdt.hpp"
#include "adfp/imputer.hpp"
#include "adfp/metrics.hpp"
#include "adfp/policy.hpp"
#include "adfp/registry.hpp"
#include "adfp/rng.hpp"
#include "adfp/sample.hpp"
#include "adfp/stats.hpp"
#include "adfp/svg_plot.hpp"
#include "adfp/synth.hpp"
