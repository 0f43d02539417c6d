// mde/io.cpp

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

#include "mde/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace mde {

namespace {

void put_u32le(std::ofstream &out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char *>(b), 4);
}

uint32_t get_u32le(std::ifstream &in, const std::string &path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char *>(b), 4))
    throw IoError("truncated header in " + path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_matrix_file(const std::string &path, const char magic[4],
                       const Mat &m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(magic, 4);
  put_u32le(out, static_cast<uint32_t>(m.rows));
  put_u32le(out, static_cast<uint32_t>(m.cols));
  static_assert(sizeof(double) == 8);
  // Host is little-endian on every supported target.
  out.write(reinterpret_cast<const char *>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!out) throw IoError("short write: " + path);
}

Mat read_matrix_file(const std::string &path, const char magic[4]) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw IoError("bad magic in " + path + " (expected " +
                  std::string(magic, 4) + ")");
  uint32_t rows = get_u32le(in, path);
  uint32_t cols = get_u32le(in, path);
  Mat m(static_cast<int>(rows), static_cast<int>(cols));
  if (!in.read(reinterpret_cast<char *>(m.data.data()),
               static_cast<std::streamsize>(m.data.size() * sizeof(double))))
    throw IoError("truncated matrix data in " + path);
  return m;
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void write_text_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out << content;
  if (!out) throw IoError("short write: " + path);
}

std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_on(const std::string &line, char sep) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t end = line.find(sep, start);
    if (end == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string &s, const std::string &context) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw IoError("expected a number, got \"" + s + "\" in " + context);
  }
}

long parse_long(const std::string &s, const std::string &context) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw IoError("expected an integer, got \"" + s + "\" in " + context);
  }
}

void ensure_dir(const std::string &path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

bool file_exists(const std::string &path) {
  return std::filesystem::exists(path);
}

}  // namespace mde
