#include "acceptance.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// Two complete CLI runs (train, eval, analyze) with the same configuration
// and seed but different output directories must produce byte-identical
// checkpoints, logs, reports, and heatmaps. argv[1] is the CLI binary.

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<unreadable:" + p.string() + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool run(const std::string& cmd) { return std::system(cmd.c_str()) == 0; }

} // namespace

int main(int argc, char** argv) {
    using namespace acceptance;
    if (argc < 2) return fail("c9 (run determinism)", "usage: acceptance_c9 <cli-binary>");
    const std::string cli = std::string("\"") + argv[1] + "\"";

    fs::path base = fs::temp_directory_path() / "acceptance_c9";
    fs::remove_all(base);
    fs::create_directories(base);
    fs::path log = base / "cli.log";

    const std::string common =
        " --seed 7"
        " --set dim=8"
        " --set model.kind=fm"
        " --set adapter.hidden=16"
        " --set train.epochs=2"
        " --set train.batch=128"
        " --set train.lr=0.02"
        " --set data.synth.users=80"
        " --set data.synth.items=50"
        " --set data.synth.samples=4000"
        " --set data.synth.latent_dim=4";

    for (const char* dir : {"a", "b"}) {
        std::string out = (base / dir).string();
        for (const char* verb : {"train", "eval", "analyze"}) {
            std::string cmd = cli + " " + verb + common + " --out \"" + out + "\" >> \"" +
                              log.string() + "\" 2>&1";
            if (!run(cmd)) {
                return fail("c9 (run determinism)",
                            std::string(verb) + " into " + dir + " exited nonzero (see " +
                                log.string() + ")");
            }
        }
    }

    const char* files[] = {"checkpoint", "train_log", "report", "heatmap_user.csv",
                           "heatmap_item.csv"};
    for (const char* f : files) {
        std::string a = slurp(base / "a" / f);
        std::string b = slurp(base / "b" / f);
        if (a != b) {
            return fail("c9 (run determinism)", std::string(f) + " differs between the two runs");
        }
        std::printf("  %s: %zu bytes, identical\n", f, a.size());
    }

    fs::remove_all(base);
    return pass("c9 (run determinism)",
                "checkpoint, train_log, report, and both heatmaps byte-identical across runs");
}
