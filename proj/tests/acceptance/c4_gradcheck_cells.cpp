#include "acceptance.hpp"

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "runner.hpp"

// Analytic gradients must match central finite differences (step 1e-5) with
// max relative error below 1e-4 on every model-kind x ablation cell, within
// a two-minute budget.

int main() {
    using namespace acceptance;
    std::filesystem::path out = std::filesystem::temp_directory_path() / "acceptance_c4";
    std::filesystem::remove_all(out);
    std::vector<std::string> overrides = {"out=" + out.string()};
    nlohmann::json cfg = adaf2m2::resolve_config("", overrides);

    Timer timer;
    bool ok = adaf2m2::run_gradcheck(cfg, std::cout);
    double sec = timer.seconds();
    std::filesystem::remove_all(out);

    if (!ok) return fail("c4 (finite-difference gradients)", "a model/ablation cell exceeded 1e-4");
    if (sec >= 120.0) {
        return fail("c4 (finite-difference gradients)",
                    "cells passed but took " + fmt(sec, 1) + "s (budget 120s)");
    }
    return pass("c4 (finite-difference gradients)",
                "12 model/ablation cells under 1e-4 in " + fmt(sec, 1) + "s");
}
