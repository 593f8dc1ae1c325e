#pragma once

#include <string>
#include <vector>

namespace phase {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    std::size_t checks_total = 0;
    std::size_t checks_passed = 0;
    bool all_pass() const { return checks_passed == checks_total; }
};

struct VerifyOptions {
    // Test hook: corrupt one swapped index inside the ZAS round trip so the
    // zas.self_inversion check fails; exercises the failure path end to end.
    bool inject_zas_fault = false;
    std::uint64_t seed = 42;
};

VerifyReport run_verify(const VerifyOptions& opts = {});

}  // namespace phase
