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
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "liplock/errors.hpp"
#include "liplock/report.hpp"

using namespace liplock;

namespace {

CertReport sample_report() {
    CertReport r;
    r.model = "mlp-64";
    r.epsilon = 1.58;
    r.clean_acc = 0.9625;
    r.pgd_acc = 0.71;
    r.cert_acc = 1.0 / 3.0; // forces a long round-trip decimal
    r.lipschitz_upper = 42.125;
    r.lipschitz_lower = 3.0000000000000004;
    r.flops = 123456789012345;
    r.samples = 2000;
    return r;
}

std::filesystem::path tmp_csv(const char* stem) {
    return std::filesystem::temp_directory_path() / (std::string(stem) + ".csv");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace

TEST_SUITE("report") {

TEST_CASE("csv round-trip restores every field exactly") {
    const CertReport r = sample_report();
    const auto path = tmp_csv("liplock-report-roundtrip");
    std::filesystem::remove(path);
    emit_report(r, path.string());

    const auto back = parse_report_csv(path.string());
    REQUIRE(back.size() == 1);
    CHECK(back[0].model == r.model);
    CHECK(back[0].epsilon == r.epsilon); // bitwise double equality throughout
    CHECK(back[0].clean_acc == r.clean_acc);
    CHECK(back[0].pgd_acc == r.pgd_acc);
    CHECK(back[0].cert_acc == r.cert_acc);
    CHECK(back[0].lipschitz_upper == r.lipschitz_upper);
    CHECK(back[0].lipschitz_lower == r.lipschitz_lower);
    CHECK(back[0].flops == r.flops);
    CHECK(back[0].samples == r.samples);
    std::filesystem::remove(path);
}

TEST_CASE("the header writes once; appends accumulate rows") {
    const auto path = tmp_csv("liplock-report-append");
    std::filesystem::remove(path);
    emit_report(sample_report(), path.string());
    CertReport second = sample_report();
    second.model = "vit-p7";
    second.samples = 500;
    emit_report(second, path.string());

    const std::string text = slurp(path);
    CHECK(text.find("model,eps,clean,pgd,cert,lip_upper,lip_lower,flops,samples") == 0);
    CHECK(text.find("model,eps", 10) == std::string::npos); // only one header

    const auto rows = parse_report_csv(path.string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].model == "mlp-64");
    CHECK(rows[1].model == "vit-p7");
    CHECK(rows[1].samples == 500);
    std::filesystem::remove(path);
}

TEST_CASE("identical reports serialize to identical bytes") {
    const std::string a = report_csv_line(sample_report());
    const std::string b = report_csv_line(sample_report());
    CHECK(a == b);

    // Infinity must survive the trip too (unbounded baselines).
    CertReport inf = sample_report();
    inf.lipschitz_upper = std::numeric_limits<double>::infinity();
    const auto path = tmp_csv("liplock-report-inf");
    std::filesystem::remove(path);
    emit_report(inf, path.string());
    const auto back = parse_report_csv(path.string());
    REQUIRE(back.size() == 1);
    CHECK(std::isinf(back[0].lipschitz_upper));
    std::filesystem::remove(path);
}

TEST_CASE("malformed input names the file and line") {
    const auto path = tmp_csv("liplock-report-bad");

    auto expect_error = [&](const std::string& content, const char* needle) {
        std::ofstream(path, std::ios::trunc) << content;
        try {
            parse_report_csv(path.string());
            FAIL_CHECK("expected a parse error for: " << content);
        } catch (const Error& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                          e.what());
        }
    };

    expect_error("not,a,header\nx,1,1,1,1,1,1,1,1\n", "header");
    expect_error("model,eps,clean,pgd,cert,lip_upper,lip_lower,flops,samples\nonly,two\n",
                 "line 2");
    expect_error(
        "model,eps,clean,pgd,cert,lip_upper,lip_lower,flops,samples\nm,x,1,1,1,1,1,1,1\n",
        "line 2");
    std::filesystem::remove(path);

    CHECK_THROWS_AS(parse_report_csv("/nonexistent/liplock.csv"), Error);

    // Model names that would corrupt the table are rejected at write time.
    CertReport evil = sample_report();
    evil.model = "a,b";
    CHECK_THROWS_AS(report_csv_line(evil), Error);
}

TEST_CASE("report_text prints a readable block") {
    const std::string text = report_text(sample_report());
    CHECK(text.find("model") != std::string::npos);
    CHECK(text.find("mlp-64") != std::string::npos);
    CHECK(text.find("clean") != std::string::npos);
    CHECK(text.find("0.9625") != std::string::npos);
    CHECK(text.find("2000") != std::string::npos);
}

} // TEST_SUITE
