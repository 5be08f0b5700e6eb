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

#include "liplock/certify.hpp"

namespace liplock {

// One CSV line per evaluation, appended; the header writes once when the
// file starts empty or absent. Numbers print as shortest round-trip
// decimals, so identical reports serialize to identical bytes and
// parse_report_csv returns exactly what emit_report wrote.
// Columns: model,eps,clean,pgd,cert,lip_upper,lip_lower,flops,samples
void emit_report(const CertReport& r, const std::string& csv_path);
std::string report_csv_line(const CertReport& r);
std::vector<CertReport> parse_report_csv(const std::string& csv_path);

// Human-readable key=value block for logs.
std::string report_text(const CertReport& r);

} // namespace liplock
