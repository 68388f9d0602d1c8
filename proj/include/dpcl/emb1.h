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

// EMB1 binary embedding files.
//
// Layout, all integers little-endian:
//
//   offset 0   4 bytes   magic "EMB1"
//   offset 4   u32       dim
//   offset 8   u64       record count
//   offset 16  records, each (u32 label id, dim x f32 components)
//
// Label names live in a sidecar file at `<path>.labels.json-lines`: one JSON
// string per line, line number = label id. Dummy labels come last and carry a
// trailing tab-separated "D" marker.

#ifndef DPCL_EMB1_H_
#define DPCL_EMB1_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dpcl/datasets.h"

namespace dpcl {

inline constexpr char kEmb1Magic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::size_t kEmb1HeaderBytes = 16;

constexpr std::uint64_t Emb1RecordBytes(std::uint64_t dim) {
  return 4 + 4 * dim;
}

struct Emb1Header {
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
};

std::filesystem::path SidecarPath(const std::filesystem::path& path);

// In-memory codec for the binary part. Decoding validates magic, dimension
// and the exact byte length; label ids are not checked here.
std::string EncodeEmb1(const EmbeddingDataset& dataset);
EmbeddingDataset DecodeEmb1(std::string_view bytes);
Emb1Header DecodeEmb1Header(std::string_view bytes);

std::string EncodeLabelSidecar(const LabelUniverse& universe);
LabelUniverse DecodeLabelSidecar(std::string_view text);

// Reads an EMB1 file and its sidecar. Throws FormatError on a malformed binary
// part and IntegrityError when a label id is not covered by the sidecar.
LabeledDataset LoadEmbeddings(const std::filesystem::path& path);

// Writes the binary file and the sidecar. Rejects an empty universe and
// records whose label is outside it before touching the filesystem.
void SaveEmbeddings(const EmbeddingDataset& dataset,
                    const LabelUniverse& universe,
                    const std::filesystem::path& path);

// Reads and validates only the 16-byte header plus the file length.
Emb1Header InspectEmbeddings(const std::filesystem::path& path);

}  // namespace dpcl

#endif  // DPCL_EMB1_H_
