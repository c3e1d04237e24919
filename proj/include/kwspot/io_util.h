// Copyright (c) 2026 The kwspot Authors
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

#ifndef KWSPOT_IO_UTIL_H_
#define KWSPOT_IO_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kwspot {

// Reads a text file into lines with trailing '\r' removed. Throws kIo.
std::vector<std::string> ReadLines(const std::filesystem::path& path);
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view content);

std::string_view Trim(std::string_view s);
std::vector<std::string> SplitString(std::string_view s, char sep);
// Splits on runs of ASCII whitespace.
std::vector<std::string> SplitWhitespace(std::string_view s);

// Fixed-point formatting with `digits` decimals; "-0.000000" is printed as
// "0.000000".
std::string FormatFixed(double value, int digits = 6);

double ParseDouble(std::string_view s);
long ParseInt(std::string_view s);

}  // namespace kwspot

#endif  // KWSPOT_IO_UTIL_H_
