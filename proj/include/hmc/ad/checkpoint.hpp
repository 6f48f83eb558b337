// Copyright 2026 The hmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Versioned binary container of named arrays. The byte layout is documented
// in docs/checkpoint_format.md; every integer and float is little-endian.

#ifndef HMC_AD_CHECKPOINT_HPP_
#define HMC_AD_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "hmc/ad/tensor.hpp"
#include "hmc/error.hpp"
#include "hmc/hash.hpp"

namespace hmc::ad {

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

template <typename T>
constexpr DType DTypeOf() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::kFloat32 : DType::kFloat64;
}

struct CheckpointArray {
  std::string name;
  DType dtype = DType::kFloat32;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<double> values;  // exact for both dtypes
};

class Checkpoint {
 public:
  static constexpr char kMagic[8] = {'H', 'M', 'C', 'C', 'K', 'P', 'T', '\0'};
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> metadata;
  std::vector<CheckpointArray> arrays;

  template <typename T>
  void add(const std::string& name, const Tensor<T>& t) {
    CheckpointArray a{name, DTypeOf<T>(), t.rows(), t.cols(), {}};
    a.values.assign(t.values().begin(), t.values().end());
    arrays.push_back(std::move(a));
  }

  const CheckpointArray* find(const std::string& name) const {
    for (const auto& a : arrays) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }

  // Copies array `name` into `into`, whose shape must already match.
  template <typename T>
  void restore(const std::string& name, Tensor<T>& into) const {
    const auto* a = find(name);
    if (a == nullptr) throw Error(ErrorCode::kConfigMismatch, "checkpoint lacks '" + name + "'");
    if (a->rows != into.rows() || a->cols != into.cols()) {
      throw Error(ErrorCode::kConfigMismatch,
                  "'" + name + "' is " + std::to_string(a->rows) + "x" + std::to_string(a->cols) +
                      " in checkpoint, model expects " + into.shape_string());
    }
    for (std::size_t i = 0; i < into.size(); ++i) into[i] = static_cast<T>(a->values[i]);
  }

  std::string meta(const std::string& key) const {
    auto it = metadata.find(key);
    if (it == metadata.end()) throw Error(ErrorCode::kFormatError, "checkpoint lacks metadata '" + key + "'");
    return it->second;
  }

  std::string Serialize() const {
    std::string out(kMagic, sizeof(kMagic));
    PutU32(out, kVersion);
    PutU64(out, config_hash);
    PutU32(out, static_cast<std::uint32_t>(metadata.size()));
    for (const auto& [k, v] : metadata) {
      PutString(out, k);
      PutString(out, v);
    }
    PutU32(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& a : arrays) {
      PutString(out, a.name);
      out.push_back(static_cast<char>(a.dtype));
      PutU64(out, a.rows);
      PutU64(out, a.cols);
      for (double v : a.values) {
        if (a.dtype == DType::kFloat32) {
          PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        } else {
          PutU64(out, std::bit_cast<std::uint64_t>(v));
        }
      }
    }
    PutU64(out, HashBytes(out));
    return out;
  }

  static Checkpoint Deserialize(const std::string& bytes) {
    Reader r{bytes};
    if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
      throw Error(ErrorCode::kFormatError, "not a checkpoint (bad magic)");
    }
    const std::uint64_t trailer = Reader{bytes, bytes.size() - 8}.U64();
    if (trailer != HashBytes(std::string_view(bytes).substr(0, bytes.size() - 8))) {
      throw Error(ErrorCode::kFormatError, "checkpoint checksum mismatch (truncated or corrupted)");
    }
    r.pos = sizeof(kMagic);
    const std::uint32_t version = r.U32();
    if (version != kVersion) {
      throw Error(ErrorCode::kFormatError, "unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.config_hash = r.U64();
    const std::uint32_t n_meta = r.U32();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
      std::string k = r.String();
      ck.metadata[k] = r.String();
    }
    const std::uint32_t n_arrays = r.U32();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
      CheckpointArray a;
      a.name = r.String();
      const auto code = static_cast<std::uint8_t>(r.Byte());
      if (code != 1 && code != 2) throw Error(ErrorCode::kFormatError, "bad dtype in '" + a.name + "'");
      a.dtype = static_cast<DType>(code);
      a.rows = r.U64();
      a.cols = r.U64();
      const std::uint64_t n = a.rows * a.cols;
      a.values.resize(n);
      for (std::uint64_t j = 0; j < n; ++j) {
        a.values[j] = a.dtype == DType::kFloat32
                          ? static_cast<double>(std::bit_cast<float>(r.U32()))
                          : std::bit_cast<double>(r.U64());
      }
      ck.arrays.push_back(std::move(a));
    }
    if (r.pos != bytes.size() - 8) throw Error(ErrorCode::kFormatError, "trailing bytes in checkpoint");
    return ck;
  }

  void Save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
    const std::string bytes = Serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write to '" + path + "'");
  }

  static Checkpoint Load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open checkpoint '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return Deserialize(bytes);
  }

 private:
  static void PutU32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  static void PutU64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  static void PutString(std::string& out, const std::string& s) {
    PutU32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
  }

  struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void Need(std::size_t n) const {
      if (pos + n > bytes.size()) throw Error(ErrorCode::kFormatError, "checkpoint truncated");
    }
    char Byte() {
      Need(1);
      return bytes[pos++];
    }
    std::uint32_t U32() {
      Need(4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
      return v;
    }
    std::uint64_t U64() {
      Need(8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
      return v;
    }
    std::string String() {
      const std::uint32_t n = U32();
      Need(n);
      std::string s = bytes.substr(pos, n);
      pos += n;
      return s;
    }
  };
};

template <typename T>
void SaveParameters(Checkpoint& ck, const ParameterList<T>& params) {
  for (const auto* p : params) ck.add(p->name, p->value);
}

template <typename T>
void RestoreParameters(const Checkpoint& ck, const ParameterList<T>& params) {
  for (auto* p : params) ck.restore(p->name, p->value);
}

}  // namespace hmc::ad

#endif  // HMC_AD_CHECKPOINT_HPP_
