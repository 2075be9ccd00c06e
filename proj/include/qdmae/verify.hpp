#ifndef QDMAE_VERIFY_HPP
#define QDMAE_VERIFY_HPP

#include <string>
#include <vector>

namespace qdmae {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// The theorem-and-formula property suite. Exact or tight-tolerance checks,
/// each independent of the code path it exercises where an oracle exists.
std::vector<CheckResult> run_property_suite();

}  // namespace qdmae

#endif
