// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace shapefat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace shapefat
