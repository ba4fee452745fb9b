/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The umbir authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
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

#ifndef UMBIR_UMBIR_HPP
#define UMBIR_UMBIR_HPP

#include "umbir/config.hpp"
#include "umbir/errors.hpp"
#include "umbir/fft.hpp"
#include "umbir/io.hpp"
#include "umbir/phantom.hpp"
#include "umbir/pipeline.hpp"
#include "umbir/polar.hpp"
#include "umbir/prior_model.hpp"
#include "umbir/pulse_response.hpp"
#include "umbir/reconstruction.hpp"
#include "umbir/render.hpp"
#include "umbir/saft.hpp"
#include "umbir/sparse.hpp"
#include "umbir/system_model.hpp"
#include "umbir/wave_geometry.hpp"

#endif  // UMBIR_UMBIR_HPP
