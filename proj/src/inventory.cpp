// mde/inventory.cpp

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

#include "mde/inventory.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mde/io.hpp"

namespace mde {

namespace {

const char *kReserved[3] = {"<blk>", "<sos>", "<eos>"};

void check_label(const std::string &s) {
  require(!s.empty(), "inventory: empty symbol");
  for (char c : s) {
    require(!std::isspace(static_cast<unsigned char>(c)) && c != ':' &&
                c != '|',
            "inventory: symbol \"" + s +
                "\" contains whitespace or a reserved separator");
  }
}

}  // namespace

PhoneInventory::PhoneInventory(std::vector<std::string> phone_labels) {
  require(!phone_labels.empty(), "inventory: no phone labels");
  symbols_.reserve(phone_labels.size() + 3);
  for (const char *r : kReserved) symbols_.emplace_back(r);
  std::set<std::string> seen(symbols_.begin(), symbols_.end());
  for (auto &label : phone_labels) {
    check_label(label);
    require(seen.insert(label).second,
            "inventory: duplicate or reserved symbol \"" + label + "\"");
    symbols_.push_back(std::move(label));
  }
  std::string joined;
  for (const auto &s : symbols_) {
    joined += s;
    joined += '\n';
  }
  hash_ = fnv1a64(joined);
}

PhoneInventory PhoneInventory::make_default(int n_phones) {
  static const char *kNames[] = {"a", "b", "d", "e", "g", "k", "l", "m",
                                 "n", "o", "p", "r", "s", "t", "u", "w"};
  constexpr int kMax = static_cast<int>(sizeof(kNames) / sizeof(kNames[0]));
  require(n_phones >= 1, "inventory: need at least one phone");
  std::vector<std::string> labels;
  for (int i = 0; i < n_phones; ++i) {
    if (i < kMax) {
      labels.emplace_back(kNames[i]);
    } else {
      labels.push_back("p" + std::to_string(i));
    }
  }
  return PhoneInventory(std::move(labels));
}

PhoneInventory PhoneInventory::load(const std::string &path) {
  auto lines = split_lines(read_text_file(path));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() < 4)
    throw IoError("inventory file " + path + ": too few symbols");
  for (int i = 0; i < 3; ++i) {
    if (lines[i] != kReserved[i])
      throw IoError("inventory file " + path + ": line " + std::to_string(i + 1) +
                    " must be " + kReserved[i] + ", got \"" + lines[i] + "\"");
  }
  std::vector<std::string> phones(lines.begin() + 3, lines.end());
  try {
    return PhoneInventory(std::move(phones));
  } catch (const ValidationError &e) {
    throw IoError("inventory file " + path + ": " + e.what());
  }
}

void PhoneInventory::save(const std::string &path) const {
  std::string out;
  for (const auto &s : symbols_) {
    out += s;
    out += '\n';
  }
  write_text_file(path, out);
}

const std::string &PhoneInventory::symbol(int idx) const {
  require(idx >= 0 && idx < num_symbols(),
          "inventory: symbol index " + std::to_string(idx) + " out of range");
  return symbols_[idx];
}

int PhoneInventory::index_of(const std::string &symbol) const {
  auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
  require(it != symbols_.end(), "inventory: unknown symbol \"" + symbol + "\"");
  return static_cast<int>(it - symbols_.begin());
}

bool PhoneInventory::contains(const std::string &symbol) const {
  return std::find(symbols_.begin(), symbols_.end(), symbol) != symbols_.end();
}

std::vector<int> PhoneInventory::parse_phone_sequence(
    const std::string &spaced) const {
  std::vector<int> seq;
  std::istringstream iss(spaced);
  std::string tok;
  while (iss >> tok) seq.push_back(index_of(tok));
  return seq;
}

std::string PhoneInventory::format_phone_sequence(
    std::span<const int> seq) const {
  std::string out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += symbol(seq[i]);
  }
  return out;
}

}  // namespace mde
