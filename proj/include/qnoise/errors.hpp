// SPDX-License-Identifier: Apache-2.0
//
// qnoise: quantization noise analysis for digital phased arrays
// Copyright (C) 2026 The qnoise authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef QNOISE_ERRORS_HPP
#define QNOISE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qnoise {

// Numerical failures. Argument errors use std::invalid_argument.

class QuadratureFailure : public std::runtime_error {
public:
    explicit QuadratureFailure(const std::string& what) : std::runtime_error(what) {}
};

class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qnoise

#endif
