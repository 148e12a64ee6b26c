// Copyright 2026 The vgskws Authors
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

#include <filesystem>
#include <string>
#include <string_view>

#include "vgskws/corpus.hpp"

namespace vgskws {

/// Reads one IntervalTier from a Praat TextGrid in either the long or the
/// short text encoding.  Empty-label intervals are dropped and the result is
/// ordered by start time.  Throws TextGridError.
AlignmentSet parse_textgrid(const std::filesystem::path& path, const std::string& tier_name);
AlignmentSet parse_textgrid_text(std::string_view text, const std::string& tier_name,
                                 const std::string& source = "<memory>");

}  // namespace vgskws
