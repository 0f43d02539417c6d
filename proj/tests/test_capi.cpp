// tests/test_capi.cpp

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

// Exercises the shared-library boundary exactly as an embedder would: only
// mde.h, no C++ headers from the core.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "mde/mde.h"

namespace {

std::string temp_dir(const std::string &tag) {
  auto dir = std::filesystem::temp_directory_path() / ("mde_capi_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

struct ConfigHandle {
  mde_config *ptr = mde_config_create();
  ~ConfigHandle() { mde_config_destroy(ptr); }
};

}  // namespace

TEST_CASE("configuration lifecycle and key access") {
  ConfigHandle cfg;
  REQUIRE(cfg.ptr != nullptr);

  char buf[64];
  CHECK(mde_config_get(cfg.ptr, "seed", buf, sizeof(buf)) == MDE_OK);
  CHECK(std::strcmp(buf, "1") == 0);

  CHECK(mde_config_set(cfg.ptr, "seed", "99") == MDE_OK);
  CHECK(mde_config_get(cfg.ptr, "seed", buf, sizeof(buf)) == MDE_OK);
  CHECK(std::strcmp(buf, "99") == 0);

  CHECK(mde_config_set(cfg.ptr, "bogus.key", "1") == MDE_ERR_VALIDATION);
  CHECK(std::strlen(mde_last_error()) > 0);
  CHECK(mde_config_set(nullptr, "seed", "1") == MDE_ERR_VALIDATION);
  CHECK(mde_config_get(cfg.ptr, "seed", buf, 0) == MDE_ERR_VALIDATION);

  // truncation is safe and NUL-terminated
  CHECK(mde_config_set(cfg.ptr, "paths.out_dir", "abcdefgh") == MDE_OK);
  char tiny[4];
  CHECK(mde_config_get(cfg.ptr, "paths.out_dir", tiny, sizeof(tiny)) == MDE_OK);
  CHECK(std::strcmp(tiny, "abc") == 0);
}

TEST_CASE("config files load through the boundary") {
  ConfigHandle cfg;
  const std::string dir = temp_dir("load");
  {
    std::ofstream out(dir + "/x.conf");
    out << "seed = 31\nsynth.n_phones = 5\n";
  }
  CHECK(mde_config_load_file(cfg.ptr, (dir + "/x.conf").c_str()) == MDE_OK);
  char buf[16];
  CHECK(mde_config_get(cfg.ptr, "synth.n_phones", buf, sizeof(buf)) == MDE_OK);
  CHECK(std::strcmp(buf, "5") == 0);

  CHECK(mde_config_load_file(cfg.ptr, (dir + "/missing.conf").c_str()) ==
        MDE_ERR_IO);
  {
    std::ofstream out(dir + "/bad.conf");
    out << "unknown.key = 1\n";
  }
  CHECK(mde_config_load_file(cfg.ptr, (dir + "/bad.conf").c_str()) ==
        MDE_ERR_VALIDATION);
}

TEST_CASE("stages run and propagate error codes") {
  ConfigHandle cfg;
  const std::string dir = temp_dir("stage");
  CHECK(mde_config_set(cfg.ptr, "paths.corpus_dir",
                       (dir + "/corpus").c_str()) == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.n_phones", "4") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.feature_dim", "4") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.n_train", "6") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.n_dev", "3") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.n_test", "3") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.prompt_len_min", "2") == MDE_OK);
  CHECK(mde_config_set(cfg.ptr, "synth.prompt_len_max", "3") == MDE_OK);

  CHECK(mde_run_stage(cfg.ptr, "synth") == MDE_OK);
  CHECK(std::filesystem::exists(dir + "/corpus/inventory.txt"));
  CHECK(std::filesystem::exists(dir + "/corpus/train.tsv"));

  CHECK(mde_run_stage(cfg.ptr, "no-such-stage") == MDE_ERR_VALIDATION);

  // training against a missing corpus is an IO failure
  ConfigHandle fresh;
  CHECK(mde_config_set(fresh.ptr, "paths.corpus_dir",
                       (dir + "/nowhere").c_str()) == MDE_OK);
  CHECK(mde_run_stage(fresh.ptr, "train") == MDE_ERR_IO);
  CHECK(std::strlen(mde_last_error()) > 0);
}

TEST_CASE("version string is present") {
  CHECK(std::strlen(mde_version()) > 0);
}
