// Copyright Contributors to the splatblocks Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace splat {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing or unreadable.
struct IoError : Error {
  using Error::Error;
};

// Container is not what it claims to be (bad magic, bad header).
struct FormatError : Error {
  using Error::Error;
};

// Container parses but its layout does not match the expected schema.
struct SchemaError : Error {
  using Error::Error;
};

// Payload values are invalid (NaN fields, zero quaternions, ...).
struct DataError : Error {
  using Error::Error;
};

// Input object violates a documented invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Bad argument to an operation.
struct ArgumentError : Error {
  using Error::Error;
};

// Stage orchestration failure (missing prerequisites, empty results).
struct PipelineError : Error {
  using Error::Error;
};

}  // namespace splat
