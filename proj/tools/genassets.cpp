// Regenerates the shipped scenario assets (models/, props/, data/) from the
// generators in the library. Run from the repository root after changing the
// scenario module; the test suite asserts the files match the generators.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "assurekit/scenario.hpp"

using namespace assurekit;

namespace {

void write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        std::cerr << "failed to write " << path << "\n";
        std::exit(1);
    }
    std::cout << "wrote " << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path root = argc > 1 ? argv[1] : ".";

    write(root / "models/handover_baseline.gcm",
          variant_text(ScenarioVariant{false, false, false, false, {}}));
    write(root / "models/handover_sensors.gcm",
          variant_text(ScenarioVariant{true, false, false, false, {}}));
    write(root / "models/handover_sensors_gripper.gcm",
          variant_text(ScenarioVariant{true, true, false, false, {}}));
    write(root / "models/handover_refined.gcm",
          variant_text(ScenarioVariant{true, true, true, true, {}}));

    write(root / "props/reqs.qry", requirement_properties_text());
    write(root / "data/experiments.json", default_experiments_json());
    return 0;
}
