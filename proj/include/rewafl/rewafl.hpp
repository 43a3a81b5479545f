// Copyright 2026 The rewafl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "rewafl/backend.hpp"
#include "rewafl/config.hpp"
#include "rewafl/config_io.hpp"
#include "rewafl/dataset.hpp"
#include "rewafl/device.hpp"
#include "rewafl/engine.hpp"
#include "rewafl/errors.hpp"
#include "rewafl/local_policy.hpp"
#include "rewafl/output.hpp"
#include "rewafl/presets.hpp"
#include "rewafl/rng.hpp"
#include "rewafl/selection.hpp"
#include "rewafl/trainer.hpp"
