#pragma once

#include <cstdint>
#include <string>

#include "causalaug/datagen.hpp"

namespace causalaug {

inline constexpr int kRecordBytes = 2404;
inline constexpr const char* kDatasetFormat = "dataset-v1";

// FNV-1a 64-bit digest of a file's bytes, as 16 lowercase hex digits.
std::string file_digest_hex(const std::string& path);

// Serialize one instance into exactly kRecordBytes little-endian bytes.
void encode_record(const Instance& inst, std::uint8_t* out);
Instance decode_record(const std::uint8_t* in);

// Writes <dir>/data.bin and <dir>/manifest.json. `command` is the producing
// command line; `extra_manifest` (a JSON object as text, may be empty) is
// merged into the manifest for augmentation provenance.
void write_dataset(const std::string& dir, const Dataset& ds, const std::string& command,
                   const std::string& extra_manifest = "");

// Reads a dataset directory, checking format, counts, and the data digest.
Dataset read_dataset(const std::string& dir);

}  // namespace causalaug
