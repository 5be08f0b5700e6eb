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
#include <vector>

namespace liplock {

// Command-line driver: pretrain | adapt | constrain | finetune | certify |
// attack | report, with --config, --seed, --in, --out, --eps. args excludes
// the program name. Returns the process exit code: 0 success, 1 usage,
// 2 unreadable or malformed data, 3 numerical failure. Internal bugs
// (logic_error) are not caught here on purpose.
int run_cli(const std::vector<std::string>& args);

} // namespace liplock
