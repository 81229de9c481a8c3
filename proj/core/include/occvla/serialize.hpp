// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace occvla::io {

// Little-endian binary helpers shared by the dataset and checkpoint
// formats. The host is assumed little-endian (asserted at startup of the
// writers); all on-disk multi-byte integers are LE by contract.

void write_bytes(std::ostream& os, const void* p, size_t n);
void read_bytes(std::istream& is, void* p, size_t n, const std::string& what);

template <typename T>
void write_pod(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  static_assert(std::is_trivially_copyable_v<T>);
  T v{};
  read_bytes(is, &v, sizeof(T), what);
  return v;
}

// Length-prefixed (u32 LE) UTF-8 string.
void write_lp_string(std::ostream& os, const std::string& s);
std::string read_lp_string(std::istream& is, const std::string& what);

uint32_t crc32(const void* data, size_t n, uint32_t seed = 0);
uint32_t crc32(std::span<const uint8_t> data, uint32_t seed = 0);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace occvla::io
