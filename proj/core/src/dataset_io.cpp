#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "causalaug/dataset_io.hpp"
#include "causalaug/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "record serialization assumes a little-endian host");

namespace causalaug {

namespace {

using nlohmann::json;

std::uint8_t factor_byte(int v) {
  return v < 0 ? std::uint8_t{255} : static_cast<std::uint8_t>(v);
}

int byte_factor(std::uint8_t b) { return b == 255 ? -1 : static_cast<int>(b); }

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size))
    throw IoError("short read on " + path);
  return bytes;
}

json canonical_map_json(const std::string& factor) {
  json arr = json::array();
  for (int d = 0; d < 10; ++d) arr.push_back(canonical_value(factor, d));
  return arr;
}

}  // namespace

std::string file_digest_hex(const std::string& path) {
  auto bytes = read_file(path);
  return hex16(fnv1a64(bytes.data(), bytes.size()));
}

void encode_record(const Instance& inst, std::uint8_t* out) {
  const FactorTuple& f = inst.factors;
  out[0] = inst.label;
  out[1] = static_cast<std::uint8_t>(f.digit);
  out[2] = static_cast<std::uint8_t>(f.thickness);
  out[3] = factor_byte(f.fg);
  out[4] = factor_byte(f.bg);
  out[5] = factor_byte(f.fg_tex);
  out[6] = factor_byte(f.bg_tex);
  const float morph = static_cast<float>(f.morph);
  std::memcpy(out + 7, &morph, 4);
  out[11] = static_cast<std::uint8_t>(inst.origin);
  std::memcpy(out + 12, inst.soft.data(), 40);
  std::memcpy(out + 52, inst.image.data(), kImageBytes);
}

Instance decode_record(const std::uint8_t* in) {
  Instance inst;
  inst.label = in[0];
  inst.factors.digit = in[1];
  inst.factors.thickness = in[2];
  inst.factors.fg = byte_factor(in[3]);
  inst.factors.bg = byte_factor(in[4]);
  inst.factors.fg_tex = byte_factor(in[5]);
  inst.factors.bg_tex = byte_factor(in[6]);
  float morph = 0.0f;
  std::memcpy(&morph, in + 7, 4);
  inst.factors.morph = morph;
  if (in[11] > 3) throw IoError("record has unknown origin byte");
  inst.origin = static_cast<Origin>(in[11]);
  std::memcpy(inst.soft.data(), in + 12, 40);
  std::memcpy(inst.image.data(), in + 52, kImageBytes);
  return inst;
}

void write_dataset(const std::string& dir, const Dataset& ds, const std::string& command,
                   const std::string& extra_manifest) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  const std::string bin_path = dir + "/data.bin";
  {
    std::ofstream out(bin_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + bin_path + " for writing");
    std::vector<std::uint8_t> rec(kRecordBytes);
    for (const auto& inst : ds.instances) {
      encode_record(inst, rec.data());
      out.write(reinterpret_cast<const char*>(rec.data()), kRecordBytes);
    }
    if (!out) throw IoError("write failed on " + bin_path);
  }

  json manifest;
  manifest["format"] = kDatasetFormat;
  manifest["variant"] = variant_name(ds.spec.variant);
  manifest["r"] = ds.spec.r;
  manifest["seed"] = ds.spec.seed;
  manifest["n_train"] = ds.spec.n_train;
  manifest["n_test"] = ds.spec.n_test;
  manifest["split"] = ds.split;
  manifest["count"] = ds.instances.size();
  manifest["record_bytes"] = kRecordBytes;
  manifest["schema"] = json::array({"label:u8", "digit:u8", "thickness:u8", "fg:u8", "bg:u8",
                                    "fg_tex:u8", "bg_tex:u8", "morph:f32", "origin:u8",
                                    "soft:10xf32", "pixels:2352xu8"});
  manifest["canonical_fg"] = canonical_map_json("fg");
  manifest["canonical_bg"] = canonical_map_json("bg");
  manifest["canonical_fg_tex"] = canonical_map_json("fg_tex");
  manifest["canonical_bg_tex"] = canonical_map_json("bg_tex");
  manifest["command"] = command;
  manifest["digest_data_bin"] = file_digest_hex(bin_path);
  if (!extra_manifest.empty()) {
    json extra = json::parse(extra_manifest, nullptr, false);
    if (extra.is_discarded() || !extra.is_object())
      throw ValidationError("write_dataset: extra manifest must be a JSON object");
    for (auto& [k, v] : extra.items()) manifest[k] = v;
  }

  const std::string man_path = dir + "/manifest.json";
  std::ofstream man(man_path, std::ios::trunc);
  if (!man) throw IoError("cannot open " + man_path + " for writing");
  man << manifest.dump(2) << "\n";
  if (!man) throw IoError("write failed on " + man_path);
}

Dataset read_dataset(const std::string& dir) {
  const std::string man_path = dir + "/manifest.json";
  auto man_bytes = read_file(man_path);
  json manifest = json::parse(man_bytes.begin(), man_bytes.end(), nullptr, false);
  if (manifest.is_discarded()) throw IoError("malformed manifest at " + man_path);
  try {
    if (manifest.at("format").get<std::string>() != kDatasetFormat)
      throw IoError("unsupported dataset format in " + man_path);
    if (manifest.at("record_bytes").get<int>() != kRecordBytes)
      throw IoError("record size mismatch in " + man_path);

    Dataset ds;
    ds.spec.variant = variant_from_name(manifest.at("variant").get<std::string>());
    ds.spec.r = manifest.at("r").get<double>();
    ds.spec.seed = manifest.at("seed").get<std::uint64_t>();
    ds.spec.n_train = manifest.at("n_train").get<int>();
    ds.spec.n_test = manifest.at("n_test").get<int>();
    ds.split = manifest.at("split").get<std::string>();
    const auto count = manifest.at("count").get<std::size_t>();

    const std::string bin_path = dir + "/data.bin";
    auto bytes = read_file(bin_path);
    if (bytes.size() != count * kRecordBytes)
      throw IoError("data.bin size does not match manifest count in " + dir);
    if (hex16(fnv1a64(bytes.data(), bytes.size())) !=
        manifest.at("digest_data_bin").get<std::string>())
      throw IoError("data.bin digest mismatch in " + dir);

    ds.instances.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      ds.instances.push_back(decode_record(bytes.data() + i * kRecordBytes));
    return ds;
  } catch (const json::exception& e) {
    throw IoError("manifest field error in " + man_path + ": " + e.what());
  }
}

}  // namespace causalaug
