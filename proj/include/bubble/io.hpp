// Copyright 2026 The bubble Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef BUBBLE_IO_HPP
#define BUBBLE_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace bubble {

/// Shortest representation that parses back to the same double.
std::string format_double(double x);

/// Comma-separated table; header names carry units, e.g. "h[J]".
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header);
  Csv& row(const std::vector<double>& values);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace bubble

#endif  // BUBBLE_IO_HPP
