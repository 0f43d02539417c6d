// mde/inventory.hpp

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

#ifndef MDE_INVENTORY_HPP_
#define MDE_INVENTORY_HPP_

#include <string>
#include <vector>

#include "mde/numerics.hpp"

namespace mde {

// Symbol alphabet shared by every matrix column index in the pipeline.
// Index 0 is the CTC blank, 1 the decoder start symbol, 2 the end symbol;
// phones occupy indices 3 and up, in file order.
class PhoneInventory {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;

  // Symbols must be unique, non-empty, free of whitespace and of the ':' and
  // '|' separators used by the text formats.
  explicit PhoneInventory(std::vector<std::string> phone_labels);

  // Builds "p" followed by the first n entries of a fixed label list.
  static PhoneInventory make_default(int n_phones);

  // One symbol per line; the first three lines must be <blk>, <sos>, <eos>.
  static PhoneInventory load(const std::string &path);
  void save(const std::string &path) const;

  int num_symbols() const { return static_cast<int>(symbols_.size()); }
  int num_phones() const { return num_symbols() - 3; }
  int blank() const { return kBlank; }
  int sos() const { return kSos; }
  int eos() const { return kEos; }
  bool is_phone(int idx) const { return idx >= 3 && idx < num_symbols(); }
  int first_phone() const { return 3; }

  const std::string &symbol(int idx) const;
  // Errors on unknown symbols.
  int index_of(const std::string &symbol) const;
  bool contains(const std::string &symbol) const;

  // FNV-1a over the newline-joined symbol list; pins checkpoints and
  // posteriorgrams to one alphabet.
  uint64_t hash() const { return hash_; }

  std::vector<int> parse_phone_sequence(const std::string &spaced) const;
  std::string format_phone_sequence(std::span<const int> seq) const;

 private:
  std::vector<std::string> symbols_;
  uint64_t hash_ = 0;
};

}  // namespace mde

#endif  // MDE_INVENTORY_HPP_
