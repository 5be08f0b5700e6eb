/*
 * Copyright 2026 The liplock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>

#include "liplock/layers.hpp"

namespace liplock {

// Binary checkpoint layout (all integers little-endian):
//   magic "CLIP" | version u32 | record count u32 | records | payload crc32
// Each record: kind u8, name length u16, UTF-8 name, shape rank u8,
// dims u32 each, payload of little-endian float32 in row-major order.
// Record 0 is a metadata record (kind 0, rank 0, empty payload) whose name
// holds the architecture as a JSON document; the remaining records carry
// one parameter tensor each, keyed by its dotted path, in visit order.
// The trailing CRC32 covers the concatenated payload bytes.
//
// Round-trips are bit-exact. Distinct faults: bad_magic, bad_version,
// truncated, bad_shape, bad_checksum, bad_record.

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

// Architecture description used for the metadata record; exposed so the
// CLI "report" command can print it.
std::string describe_network(const Network& net);

} // namespace liplock
