// core/include/lgmsep/container.h

// Copyright 2026  LGMSep Authors

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

#ifndef LGMSEP_CONTAINER_H_
#define LGMSEP_CONTAINER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lgmsep/common.h"

namespace lgmsep {

// Versioned binary container of named f64 tensors, row-major little-endian,
// with a trailing FNV-1a digest over the payload. Weight files and solver
// checkpoints share this encoding; they differ only in magic and in which
// tensors they declare.
struct NamedTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  std::size_t NumElements() const {
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
};

class TensorContainer {
 public:
  TensorContainer() = default;
  TensorContainer(std::string magic, std::uint32_t version)
      : magic_(std::move(magic)), version_(version) {}

  const std::string &magic() const { return magic_; }
  std::uint32_t version() const { return version_; }

  void Add(const std::string &name, std::vector<std::uint64_t> dims,
           std::vector<double> values);
  void AddScalar(const std::string &name, double value) {
    Add(name, {1}, {value});
  }

  bool Has(const std::string &name) const;
  // Throws IoError if absent.
  const NamedTensor &Get(const std::string &name) const;
  double GetScalar(const std::string &name) const;

  const std::vector<NamedTensor> &tensors() const { return tensors_; }

  // Serializes header + tensors + digest. Throws IoError on I/O failure.
  void WriteFile(const std::string &path) const;

  // Parses and validates magic/version/digest. Error messages carry the
  // byte offset where parsing failed.
  static TensorContainer ReadFile(const std::string &path,
                                  const std::string &expected_magic,
                                  std::uint32_t max_version);

 private:
  std::string magic_;
  std::uint32_t version_ = 1;
  std::vector<NamedTensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

std::uint64_t Fnv1a64(const std::uint8_t *data, std::size_t len,
                      std::uint64_t seed = 1469598103934665603ULL);

}  // namespace lgmsep

#endif  // LGMSEP_CONTAINER_H_
