/*
 * Copyright (C) 2026 The chemoviro authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "chemoviro/dynamics.hpp"
#include "chemoviro/equilibria.hpp"
#include "chemoviro/errors.hpp"
#include "chemoviro/linalg.hpp"
#include "chemoviro/model.hpp"
#include "chemoviro/optimal_control.hpp"
#include "chemoviro/parameters.hpp"
#include "chemoviro/reproduction.hpp"
#include "chemoviro/state.hpp"
