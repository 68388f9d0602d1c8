// Copyright 2026 The DPCL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpcl/emb1.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>
#include <vector>

#include "dpcl/errors.h"
#include "json.hpp"

namespace dpcl {
namespace {

constexpr std::string_view kDummyMarker = "\tD";

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

std::uint64_t GetU64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

void WriteFile(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace

std::filesystem::path SidecarPath(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".labels.json-lines");
}

std::string EncodeEmb1(const EmbeddingDataset& dataset) {
  if (dataset.dim() > UINT32_MAX) {
    throw InvalidArgument("dimension does not fit the EMB1 u32 field");
  }
  std::string out;
  out.reserve(kEmb1HeaderBytes + dataset.size() * Emb1RecordBytes(dataset.dim()));
  out.append(kEmb1Magic, 4);
  PutU32(out, static_cast<std::uint32_t>(dataset.dim()));
  PutU64(out, dataset.size());
  for (const Record& r : dataset.records()) {
    PutU32(out, r.label.value);
    for (float v : r.values) PutU32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Emb1Header DecodeEmb1Header(std::string_view bytes) {
  if (bytes.size() < kEmb1HeaderBytes) {
    throw FormatError("EMB1 header truncated: expected " +
                          std::to_string(kEmb1HeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()),
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), kEmb1Magic, 4) != 0) {
    throw FormatError("bad EMB1 magic", 0);
  }
  Emb1Header header{GetU32(bytes, 4), GetU64(bytes, 8)};
  if (header.dim == 0) throw FormatError("EMB1 dimension is zero", 4);
  const std::uint64_t payload = bytes.size() - kEmb1HeaderBytes;
  const std::uint64_t record_bytes = Emb1RecordBytes(header.dim);
  if (header.count > payload / record_bytes + 1) {
    // Cheap overflow guard before the exact length comparison below.
    throw FormatError("EMB1 record count " + std::to_string(header.count) +
                          " exceeds file payload of " + std::to_string(payload) +
                          " bytes",
                      8);
  }
  const std::uint64_t expected = kEmb1HeaderBytes + header.count * record_bytes;
  if (bytes.size() != expected) {
    const std::uint64_t complete = payload / record_bytes;
    throw FormatError(
        "EMB1 length mismatch: expected " + std::to_string(expected) +
            " bytes, got " + std::to_string(bytes.size()),
        std::min<std::uint64_t>(kEmb1HeaderBytes + complete * record_bytes,
                                bytes.size()));
  }
  return header;
}

EmbeddingDataset DecodeEmb1(std::string_view bytes) {
  const Emb1Header header = DecodeEmb1Header(bytes);
  std::vector<Record> records;
  records.reserve(header.count);
  std::size_t at = kEmb1HeaderBytes;
  for (std::uint64_t i = 0; i < header.count; ++i) {
    Record r;
    r.label = LabelId{GetU32(bytes, at)};
    at += 4;
    r.values.resize(header.dim);
    for (std::uint32_t d = 0; d < header.dim; ++d, at += 4) {
      r.values[d] = std::bit_cast<float>(GetU32(bytes, at));
    }
    records.push_back(std::move(r));
  }
  return EmbeddingDataset(header.dim, std::move(records));
}

std::string EncodeLabelSidecar(const LabelUniverse& universe) {
  std::string out;
  for (std::uint32_t i = 0; i < universe.size(); ++i) {
    out += nlohmann::json(universe.names()[i]).dump();
    if (universe.is_dummy(LabelId{i})) out += kDummyMarker;
    out += '\n';
  }
  return out;
}

LabelUniverse DecodeLabelSidecar(std::string_view text) {
  std::vector<std::string> names;
  std::size_t dummies = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    bool dummy = false;
    if (line.ends_with(kDummyMarker)) {
      dummy = true;
      line.remove_suffix(kDummyMarker.size());
    }
    if (dummy) {
      ++dummies;
    } else if (dummies > 0) {
      throw IntegrityError("label sidecar line " + std::to_string(line_no) +
                           ": real label after dummy labels");
    }
    if (!line.empty() && line.front() == '"') {
      try {
        names.push_back(nlohmann::json::parse(line).get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw IntegrityError("label sidecar line " + std::to_string(line_no) +
                             ": " + e.what());
      }
    } else {
      names.emplace_back(line);
    }
  }
  if (names.empty()) throw IntegrityError("label sidecar is empty");
  try {
    return LabelUniverse(std::move(names), dummies);
  } catch (const InvalidArgument& e) {
    throw IntegrityError(std::string("label sidecar: ") + e.what());
  }
}

LabeledDataset LoadEmbeddings(const std::filesystem::path& path) {
  const std::string bytes = ReadFile(path);
  EmbeddingDataset data = [&] {
    try {
      return DecodeEmb1(bytes);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
  }();
  LabelUniverse universe = DecodeLabelSidecar(ReadFile(SidecarPath(path)));
  data.CheckLabels(universe);
  return {std::move(data), std::move(universe)};
}

void SaveEmbeddings(const EmbeddingDataset& dataset,
                    const LabelUniverse& universe,
                    const std::filesystem::path& path) {
  if (universe.empty()) {
    throw InvalidArgument("refusing to write EMB1 with an empty label list");
  }
  dataset.CheckLabels(universe);
  WriteFile(path, EncodeEmb1(dataset));
  WriteFile(SidecarPath(path), EncodeLabelSidecar(universe));
}

Emb1Header InspectEmbeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string head(kEmb1HeaderBytes, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.size() < kEmb1HeaderBytes) {
    throw FormatError(path.string() + ": EMB1 header truncated: expected " +
                          std::to_string(kEmb1HeaderBytes) + " bytes, got " +
                          std::to_string(head.size()),
                      head.size());
  }
  const std::uint64_t file_size = std::filesystem::file_size(path);
  if (std::memcmp(head.data(), kEmb1Magic, 4) != 0) {
    throw FormatError(path.string() + ": bad EMB1 magic", 0);
  }
  Emb1Header header{GetU32(head, 4), GetU64(head, 8)};
  if (header.dim == 0) throw FormatError(path.string() + ": EMB1 dimension is zero", 4);
  const std::uint64_t record_bytes = Emb1RecordBytes(header.dim);
  const std::uint64_t payload = file_size - kEmb1HeaderBytes;
  if (header.count > payload / record_bytes + 1 ||
      file_size != kEmb1HeaderBytes + header.count * record_bytes) {
    throw FormatError(path.string() + ": EMB1 length mismatch: expected " +
                          std::to_string(kEmb1HeaderBytes +
                                         header.count * record_bytes) +
                          " bytes, got " + std::to_string(file_size),
                      kEmb1HeaderBytes + (payload / record_bytes) * record_bytes);
  }
  return header;
}

}  // namespace dpcl
