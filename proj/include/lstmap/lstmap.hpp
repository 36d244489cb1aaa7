/**
 * Copyright (C) The lstmap Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef LSTMAP_LSTMAP_HPP
#define LSTMAP_LSTMAP_HPP

#include "lstmap/baselines.hpp"
#include "lstmap/core.hpp"
#include "lstmap/episodes.hpp"
#include "lstmap/eval.hpp"
#include "lstmap/io.hpp"
#include "lstmap/lst.hpp"
#include "lstmap/map_classifier.hpp"
#include "lstmap/ot.hpp"
#include "lstmap/stats.hpp"

#endif  // LSTMAP_LSTMAP_HPP
