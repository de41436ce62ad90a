#include "acceptance.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "datasets.hpp"
#include "metrics.hpp"
#include "trainer.hpp"

// On MovieLens-1M the full framework (masked auxiliary training plus the
// state-aware adapter) must not regress the factorization-machine baseline:
// over three seeds, mean test AUC with the framework >= mean without it,
// with both arms trained identically. The expected relative improvement is
// small (up to about +1.1%); the binding gate is non-regression of the mean.
//
// Needs ADAF2M2_ML1M_DIR (users.dat, movies.dat, ratings.dat); SKIP without.

using namespace adaf2m2;

namespace {

constexpr const char* kId = "c2 (framework non-regression)";

double train_arm(const Dataset& train, const Dataset& val, const Dataset& test,
                 const StatsStore& stats, Ablation ablation, std::uint64_t seed) {
    BundleConfig bc;
    bc.dim = 16;
    bc.model.kind = ModelKind::Fm;
    bc.adapter.hidden = 128;
    bc.signals = {1, 1, false};
    bc.ablation = ablation;
    ModelBundle bundle(train.schema(), bc, seed);
    TrainConfig tc;
    tc.alpha = 0.2;
    tc.batch = 256;
    tc.lr = 0.001;
    tc.epochs = 3;
    tc.seed = seed;
    Trainer trainer(bundle, &stats, tc);
    trainer.fit(train, val);
    return auc(trainer.predict_all(test), test.labels()).value_or(-1.0);
}

} // namespace

int main() {
    using namespace acceptance;
    const char* dir = std::getenv("ADAF2M2_ML1M_DIR");
    if (dir == nullptr || *dir == '\0') {
        return skip(kId, "set ADAF2M2_ML1M_DIR to a MovieLens-1M directory "
                         "(users.dat, movies.dat, ratings.dat) to run this criterion");
    }

    Timer timer;
    Dataset full = [&] {
        try {
            return load_movielens(dir);
        } catch (const IoError& e) {
            std::printf("  %s\n", e.what());
            std::exit(skip(kId, "ADAF2M2_ML1M_DIR is set but unreadable"));
        }
    }();

    double base_sum = 0.0;
    double full_sum = 0.0;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto parts = full.split_random(0.8, 0.1, 0.1, seed);
        StatsStore stats = build_stats(parts[0]);
        double base = train_arm(parts[0], parts[1], parts[2], stats, Ablation::BaseOnly, seed);
        double with = train_arm(parts[0], parts[1], parts[2], stats, Ablation::Full, seed);
        std::printf("  seed %llu: base %.4f framework %.4f (%.0fs)\n",
                    static_cast<unsigned long long>(seed), base, with, timer.seconds());
        base_sum += base;
        full_sum += with;
    }
    double base_mean = base_sum / 3.0;
    double full_mean = full_sum / 3.0;
    auto ri = rela_impr(full_mean, base_mean);
    std::printf("  mean base %.4f, mean framework %.4f, rela_impr %+.3f%% (target band 0%% to +1.1%%)\n",
                base_mean, full_mean, ri.value_or(0.0));

    if (full_mean + 1e-12 < base_mean) {
        return fail(kId, "framework mean " + fmt(full_mean) + " regresses base mean " +
                             fmt(base_mean));
    }
    return pass(kId, "framework mean " + fmt(full_mean) + " >= base mean " + fmt(base_mean) +
                         " over 3 seeds (" + fmt(timer.seconds(), 0) + "s)");
}
