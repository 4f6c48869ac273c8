/*
 * Copyright 2026 The softeval Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#if __cplusplus < 202002L
#error softeval requires C++20 or newer.
#endif

#include "softeval/compensated_sum.hpp"
#include "softeval/error.hpp"
#include "softeval/labels.hpp"
#include "softeval/softmetrics.hpp"
#include "softeval/rng.hpp"
#include "softeval/stats.hpp"
#include "softeval/stability.hpp"
#include "softeval/report.hpp"
#include "softeval/serialize.hpp"
#include "softeval/io.hpp"
