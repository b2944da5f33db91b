/*
 * Copyright 2026 The xfersched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "xfersched/batcher.hpp"
#include "xfersched/collective.hpp"
#include "xfersched/cost_model.hpp"
#include "xfersched/dag.hpp"
#include "xfersched/dag_json.hpp"
#include "xfersched/error.hpp"
#include "xfersched/generator.hpp"
#include "xfersched/json_io.hpp"
#include "xfersched/order.hpp"
#include "xfersched/pipeline.hpp"
#include "xfersched/sim.hpp"
#include "xfersched/timeline.hpp"
#include "xfersched/transfer_scheduler.hpp"
