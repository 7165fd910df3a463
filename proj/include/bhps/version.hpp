// Copyright 2026 The bhps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace bhps {
inline constexpr const char* kVersion = "0.1.0";
}
