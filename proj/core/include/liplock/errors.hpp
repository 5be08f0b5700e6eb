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

#include <stdexcept>
#include <string>

namespace liplock {

// Error categories map onto the CLI exit codes: usage -> 1, data -> 2,
// numeric -> 3. Internal logic bugs throw logic_error and are never mapped.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& msg) { return Error(ErrorKind::usage, msg); }
inline Error data_error(const std::string& msg) { return Error(ErrorKind::data, msg); }
inline Error numeric_error(const std::string& msg) { return Error(ErrorKind::numeric, msg); }

// Checkpoint loading failures carry a distinct code so callers can tell
// a truncated file from a checksum mismatch without parsing messages.
enum class CkptFault {
    bad_magic,
    bad_version,
    truncated,
    bad_checksum,
    bad_shape,
    bad_record,
};

class CkptError : public Error {
public:
    CkptError(CkptFault fault, const std::string& msg)
        : Error(ErrorKind::data, msg), fault_(fault) {}
    CkptFault fault() const { return fault_; }

private:
    CkptFault fault_;
};

} // namespace liplock
