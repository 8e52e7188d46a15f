// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace btk {

/// Writes to a sibling temp file and renames over `path`, so a failed write
/// never leaves a partial file behind. Throws IoFailure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Throws IoFailure when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Little-endian primitives for the binary containers.
void append_u16_le(std::string& out, std::uint16_t v);
void append_u32_le(std::string& out, std::uint32_t v);
void append_f32_le(std::string& out, float v);
std::uint16_t read_u16_le(const char* p);
std::uint32_t read_u32_le(const char* p);
float read_f32_le(const char* p);

}  // namespace btk
