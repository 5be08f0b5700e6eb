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
#include "liplock/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "liplock/errors.hpp"

namespace liplock {

namespace {

constexpr const char* kHeader = "model,eps,clean,pgd,cert,lip_upper,lip_lower,flops,samples";

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw numeric_error("report: cannot format number");
    return std::string(buf, p);
}

double parse_num(const std::string& v, const std::string& where) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw data_error("report: bad number in " + where + ": '" + v + "'");
    return out;
}

int64_t parse_i64(const std::string& v, const std::string& where) {
    int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw data_error("report: bad integer in " + where + ": '" + v + "'");
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(line);
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

std::string report_csv_line(const CertReport& r) {
    if (r.model.find(',') != std::string::npos || r.model.find('\n') != std::string::npos)
        throw usage_error("report: model name must not contain ',' or newlines");
    std::ostringstream ss;
    ss << r.model << ',' << fmt(r.epsilon) << ',' << fmt(r.clean_acc) << ','
       << fmt(r.pgd_acc) << ',' << fmt(r.cert_acc) << ',' << fmt(r.lipschitz_upper)
       << ',' << fmt(r.lipschitz_lower) << ',' << r.flops << ',' << r.samples;
    return ss.str();
}

void emit_report(const CertReport& r, const std::string& csv_path) {
    bool need_header = true;
    {
        std::ifstream probe(csv_path, std::ios::binary);
        if (probe && probe.peek() != std::ifstream::traits_type::eof())
            need_header = false;
    }
    std::ofstream out(csv_path, std::ios::binary | std::ios::app);
    if (!out) throw data_error("cannot open report file for append: " + csv_path);
    if (need_header) out << kHeader << '\n';
    out << report_csv_line(r) << '\n';
    if (!out) throw data_error("write failed: " + csv_path);
}

std::vector<CertReport> parse_report_csv(const std::string& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw data_error("cannot open report file: " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw data_error("report: missing or wrong header in " + csv_path);
    std::vector<CertReport> out;
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        const std::string where = csv_path + " line " + std::to_string(ln);
        const auto f = split_csv(line);
        if (f.size() != 9)
            throw data_error("report: expected 9 fields in " + where);
        CertReport r;
        r.model = f[0];
        r.epsilon = parse_num(f[1], where);
        r.clean_acc = parse_num(f[2], where);
        r.pgd_acc = parse_num(f[3], where);
        r.cert_acc = parse_num(f[4], where);
        r.lipschitz_upper = parse_num(f[5], where);
        r.lipschitz_lower = parse_num(f[6], where);
        r.flops = parse_i64(f[7], where);
        r.samples = int(parse_i64(f[8], where));
        out.push_back(std::move(r));
    }
    return out;
}

std::string report_text(const CertReport& r) {
    std::ostringstream ss;
    ss << "model       = " << r.model << '\n'
       << "eps         = " << fmt(r.epsilon) << '\n'
       << "clean_acc   = " << fmt(r.clean_acc) << '\n'
       << "pgd_acc     = " << fmt(r.pgd_acc) << '\n'
       << "cert_acc    = " << fmt(r.cert_acc) << '\n'
       << "lip_upper   = " << fmt(r.lipschitz_upper) << '\n'
       << "lip_lower   = " << fmt(r.lipschitz_lower) << '\n'
       << "flops       = " << r.flops << '\n'
       << "samples     = " << r.samples << '\n';
    return ss.str();
}

} // namespace liplock
