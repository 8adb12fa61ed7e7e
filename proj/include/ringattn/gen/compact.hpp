/*
 * Copyright 2026 The ringattn Authors
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

#include "ringattn/core/model.hpp"

namespace ringattn {

/**
 * Shortens a valid schedule by moving transfers only.
 *
 * A cycle without computes is removed when every one of its transfers can be
 * hoisted into an idle transfer slot of an earlier cycle: the sender's copy
 * must be unchanged between the two cycles, and the receiver must not touch
 * the stored id in between, and the simulator findings must not change.
 * Fully idle cycles are dropped. Runs to a fixpoint,
 * so compact(compact(s)) == compact(s).
 */
Schedule compact(const Schedule& s);

}  // namespace ringattn
