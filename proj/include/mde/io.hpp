// mde/io.hpp

// Copyright 2026  MDE Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MDE_IO_HPP_
#define MDE_IO_HPP_

#include <string>
#include <vector>

#include "mde/numerics.hpp"

namespace mde {

// Binary matrix container shared by feature files (magic "MDE1") and
// posteriorgram files (magic "MDE2"): 4 magic bytes, uint32 LE rows, uint32 LE
// cols, then rows*cols float64 LE row-major.
void write_matrix_file(const std::string &path, const char magic[4],
                       const Mat &m);
Mat read_matrix_file(const std::string &path, const char magic[4]);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

std::vector<std::string> split_lines(const std::string &text);
std::vector<std::string> split_on(const std::string &line, char sep);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string &s, const std::string &context);
long parse_long(const std::string &s, const std::string &context);

void ensure_dir(const std::string &path);
bool file_exists(const std::string &path);

}  // namespace mde

#endif  // MDE_IO_HPP_
