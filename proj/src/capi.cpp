// mde/capi.cpp

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

#include "mde/mde.h"

#include <cstring>
#include <new>
#include <string>

#include "mde/pipeline.hpp"

struct mde_config {
  mde::PipelineConfig impl;
};

namespace {

thread_local std::string g_last_error;

mde_status guard(const std::function<void()> &fn) {
  try {
    fn();
    g_last_error.clear();
    return MDE_OK;
  } catch (const mde::IoError &e) {
    g_last_error = e.what();
    return MDE_ERR_IO;
  } catch (const mde::ValidationError &e) {
    g_last_error = e.what();
    return MDE_ERR_VALIDATION;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return MDE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MDE_ERR_INTERNAL;
  }
}

mde_status check_args(bool ok, const char *msg) {
  if (ok) return MDE_OK;
  g_last_error = msg;
  return MDE_ERR_VALIDATION;
}

}  // namespace

extern "C" {

mde_config *mde_config_create(void) {
  return new (std::nothrow) mde_config();
}

void mde_config_destroy(mde_config *cfg) { delete cfg; }

mde_status mde_config_load_file(mde_config *cfg, const char *path) {
  if (mde_status s = check_args(cfg && path, "null argument"); s != MDE_OK)
    return s;
  return guard([&] { cfg->impl.apply_file(path); });
}

mde_status mde_config_set(mde_config *cfg, const char *key,
                          const char *value) {
  if (mde_status s = check_args(cfg && key && value, "null argument");
      s != MDE_OK)
    return s;
  return guard([&] { cfg->impl.set(key, value); });
}

mde_status mde_config_get(const mde_config *cfg, const char *key, char *buf,
                          size_t buf_len) {
  if (mde_status s =
          check_args(cfg && key && buf && buf_len > 0, "null argument");
      s != MDE_OK)
    return s;
  return guard([&] {
    const std::string &v = cfg->impl.get(key);
    std::strncpy(buf, v.c_str(), buf_len - 1);
    buf[buf_len - 1] = '\0';
  });
}

mde_status mde_run_stage(const mde_config *cfg, const char *stage) {
  if (mde_status s = check_args(cfg && stage, "null argument"); s != MDE_OK)
    return s;
  return guard([&] { mde::run_stage(cfg->impl, stage); });
}

const char *mde_last_error(void) { return g_last_error.c_str(); }

const char *mde_version(void) { return "mde 1.0.0"; }

}  // extern "C"
