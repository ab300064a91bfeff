// core/src/container.cc

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

#include "lgmsep/container.h"

#include <cstring>
#include <fstream>

namespace lgmsep {

namespace {

// All multi-byte fields are little-endian. The hosts we target are LE; the
// explicit byte packing keeps the format well defined regardless.
void PutU32(std::vector<std::uint8_t> *out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back((v >> (8 * i)) & 0xff);
}

void PutU64(std::vector<std::uint8_t> *out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back((v >> (8 * i)) & 0xff);
}

void PutF64(std::vector<std::uint8_t> *out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  PutU64(out, bits);
}

class Reader {
 public:
  Reader(const std::uint8_t *data, std::size_t len, const std::string &path)
      : data_(data), len_(len), path_(path) {}

  std::size_t offset() const { return off_; }

  void Need(std::size_t n) const {
    if (off_ + n > len_)
      throw IoError(path_ + ": truncated file at byte offset " +
                    std::to_string(off_) + " (need " + std::to_string(n) +
                    " more bytes)");
  }

  std::uint32_t GetU32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[off_ + i]) << (8 * i);
    off_ += 4;
    return v;
  }

  std::uint64_t GetU64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[off_ + i]) << (8 * i);
    off_ += 8;
    return v;
  }

  double GetF64() {
    std::uint64_t bits = GetU64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::string GetBytes(std::size_t n) {
    Need(n);
    std::string s(reinterpret_cast<const char *>(data_ + off_), n);
    off_ += n;
    return s;
  }

 private:
  const std::uint8_t *data_;
  std::size_t len_;
  std::size_t off_ = 0;
  std::string path_;
};

}  // namespace

std::uint64_t Fnv1a64(const std::uint8_t *data, std::size_t len,
                      std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

void TensorContainer::Add(const std::string &name,
                          std::vector<std::uint64_t> dims,
                          std::vector<double> values) {
  NamedTensor t;
  t.name = name;
  t.dims = std::move(dims);
  t.values = std::move(values);
  if (t.NumElements() != t.values.size())
    throw InvalidInputError("TensorContainer::Add: dims do not match data for " +
                            name);
  if (index_.count(name))
    throw InvalidInputError("TensorContainer::Add: duplicate tensor " + name);
  index_[name] = tensors_.size();
  tensors_.push_back(std::move(t));
}

bool TensorContainer::Has(const std::string &name) const {
  return index_.count(name) != 0;
}

const NamedTensor &TensorContainer::Get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw IoError("TensorContainer: missing tensor '" + name + "' in " +
                  magic_ + " container");
  return tensors_[it->second];
}

double TensorContainer::GetScalar(const std::string &name) const {
  const NamedTensor &t = Get(name);
  if (t.values.size() != 1)
    throw IoError("TensorContainer: tensor '" + name + "' is not a scalar");
  return t.values[0];
}

void TensorContainer::WriteFile(const std::string &path) const {
  if (magic_.size() != 4)
    throw InvalidInputError("TensorContainer: magic must be 4 bytes");
  std::vector<std::uint8_t> buf;
  for (char c : magic_) buf.push_back(static_cast<std::uint8_t>(c));
  PutU32(&buf, version_);
  PutU32(&buf, static_cast<std::uint32_t>(tensors_.size()));
  for (const auto &t : tensors_) {
    PutU32(&buf, static_cast<std::uint32_t>(t.name.size()));
    for (char c : t.name) buf.push_back(static_cast<std::uint8_t>(c));
    PutU32(&buf, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) PutU64(&buf, d);
    for (double v : t.values) PutF64(&buf, v);
  }
  PutU64(&buf, Fnv1a64(buf.data(), buf.size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char *>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed: " + path);
}

TensorContainer TensorContainer::ReadFile(const std::string &path,
                                          const std::string &expected_magic,
                                          std::uint32_t max_version) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 4 + 4 + 4 + 8)
    throw IoError(path + ": truncated file at byte offset " +
                  std::to_string(buf.size()));
  const std::size_t payload_len = buf.size() - 8;

  Reader r(buf.data(), payload_len, path);
  TensorContainer c;
  c.magic_ = r.GetBytes(4);
  if (c.magic_ != expected_magic)
    throw IoError(path + ": bad magic '" + c.magic_ + "', expected '" +
                  expected_magic + "'");
  c.version_ = r.GetU32();
  if (c.version_ == 0 || c.version_ > max_version)
    throw IoError(path + ": unsupported version " +
                  std::to_string(c.version_));

  const std::uint32_t count = r.GetU32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.GetU32();
    if (name_len > 4096)
      throw IoError(path + ": implausible name length at byte offset " +
                    std::to_string(r.offset() - 4));
    NamedTensor t;
    t.name = r.GetBytes(name_len);
    const std::uint32_t ndim = r.GetU32();
    if (ndim > 16)
      throw IoError(path + ": implausible rank at byte offset " +
                    std::to_string(r.offset() - 4));
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.dims.push_back(r.GetU64());
      numel *= static_cast<std::size_t>(t.dims.back());
      if (numel > (1ULL << 32))
        throw IoError(path + ": implausible tensor size at byte offset " +
                      std::to_string(r.offset()));
    }
    t.values.resize(numel);
    for (std::size_t k = 0; k < numel; ++k) t.values[k] = r.GetF64();
    c.index_[t.name] = c.tensors_.size();
    c.tensors_.push_back(std::move(t));
  }
  if (r.offset() != payload_len)
    throw IoError(path + ": trailing garbage at byte offset " +
                  std::to_string(r.offset()));

  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i)
    stored |= std::uint64_t(buf[payload_len + i]) << (8 * i);
  const std::uint64_t computed = Fnv1a64(buf.data(), payload_len);
  if (stored != computed)
    throw IoError(path + ": digest mismatch, file is corrupt");
  return c;
}

}  // namespace lgmsep
