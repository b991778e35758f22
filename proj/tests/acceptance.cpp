// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.
// Exit status is the number of failed criteria not listed in --known.
//   qbrain_acceptance                     all criteria
//   qbrain_acceptance --fast              skip the criteria that need full training runs
//   qbrain_acceptance --known a,b         failures of a and b are still printed as FAIL
//                                         but do not count towards the exit status

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qbrain/checkpoint.hpp"
#include "qbrain/checks.hpp"
#include "qbrain/data.hpp"
#include "qbrain/eval.hpp"
#include "qbrain/objective.hpp"
#include "qbrain/train.hpp"

using namespace qbrain;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;
int known_failures = 0;
std::set<std::string> known;

void verdict(bool ok, const char* name, const std::string& detail) {
    const bool expected = known.contains(name);
    if (!ok) ++(expected ? known_failures : failures);
    std::printf("%s  %-28s %s%s\n", ok ? "PASS" : "FAIL", name, detail.c_str(),
                !ok && expected ? " [known]" : ok && expected ? " [listed as known, now passing]" : "");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- fast criteria ---------------------------------------------------------

void oracle_equivalence() {
    constexpr std::size_t kTrials = 10000;
    constexpr double kTol = 1e-10, kSeconds = 5.0;
    const auto t = Clock::now();
    const CheckReport r = check_oracle(kTrials, 1, kTol);
    const double secs = since(t);
    verdict(r.pass() && r.max_error() <= kTol && secs < kSeconds, "oracle_equivalence",
            fmt("%zu tuples, max |closed - simulated| = %.3e (tol %.0e), %.2fs (limit %.0fs)", kTrials, r.max_error(),
                kTol, secs, kSeconds));
}

void aggregation_equivalence() {
    constexpr std::size_t kConfigs = 100, kMaxVoxels = 64;
    constexpr double kTol = 1e-12;
    const CheckReport r = check_aggregation(kConfigs, kMaxVoxels, 1, kTol);
    verdict(r.pass() && r.max_error() <= kTol, "aggregation_equivalence",
            fmt("%zu configs, C <= %zu, max |loop - vector| = %.3e (tol %.0e)", kConfigs, kMaxVoxels, r.max_error(),
                kTol));
}

void gradient_suite() {
    GradCheckOptions o;
    o.voxels = 16;
    o.embed_dim = 8;
    o.blocks = 2;
    o.loss_batch = 8;
    o.step = 1e-6;
    o.tolerance = 1e-4;
    constexpr double kSeconds = 30.0;
    const auto t = Clock::now();
    const CheckReport r = check_gradients(o);
    const double secs = since(t);
    const CheckCase* worst = &r.cases.front();
    for (const auto& c : r.cases)
        if (c.max_error > worst->max_error) worst = &c;
    std::size_t failed = 0;
    for (const auto& c : r.cases) failed += c.pass ? 0 : 1;
    verdict(r.pass() && secs < kSeconds, "gradient_suite",
            fmt("%zu tensors/cases, %zu failed, worst rel err %.3e in %s (analytic %.6e, numeric %.6e; tol %.0e, "
                "h %.0e), %.2fs (limit %.0fs)",
                r.cases.size(), failed, worst->max_error, worst->name.c_str(), worst->worst_analytic,
                worst->worst_numeric, o.tolerance, o.step, secs, kSeconds));
}

void identity_at_init() {
    constexpr double kLossTol = 1e-12;
    const SynthConfig sc;
    const Dataset data = gen_synthetic(sc).train;
    TrainConfig tc;
    const EncoderParams p = initial_encoder(data, tc);
    std::vector<std::size_t> order(data.samples());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(tc.seed, 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const std::span<const std::size_t> batch(order.data(), tc.batch_size);

    bool exact = true;
    Matrix pred(batch.size(), p.embed_dim()), targ(batch.size(), p.embed_dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const EncodeTrace t = encode_traced(data.voxels.row(batch[i]), p, tc.flags);
        const VoxelVector x0 = VoxelVector::clamped(t.squashed);
        for (std::size_t b = 0; b < t.outputs.size(); ++b) exact = exact && t.outputs[b] == x0.values();
        exact = exact && t.final_x.values() == x0.values();
        // Block-free reference: project the clamped logistic directly.
        Vector q = matvec(p.proj_weight, x0);
        for (std::size_t d = 0; d < q.size(); ++d) q[d] += p.proj_bias[d];
        const double n = norm2(q);
        for (std::size_t d = 0; d < q.size(); ++d) pred(i, d) = q[d] / n;
        const auto tr = data.embeddings.row(batch[i]);
        const double tn = norm2(tr);
        for (std::size_t d = 0; d < q.size(); ++d) targ(i, d) = tr[d] / tn;
    }
    const double reference = contrastive_loss({pred, targ, tc.tau}).loss;
    double first = 0.0;
    tc.epochs = 1;
    bool got = false;
    // Only the first step is needed; stop by throwing out of the callback.
    struct Stop {};
    try {
        train_loop(data, tc, [&](const TraceRow& r) {
            first = r.loss;
            got = true;
            throw Stop{};
        });
    } catch (const Stop&) {
    }
    const double diff = std::abs(first - reference);
    verdict(exact && got && diff <= kLossTol, "identity_at_init",
            fmt("blocks pass inputs bit-exactly: %s; first-batch loss %.17g vs block-free %.17g, |diff| = %.1e "
                "(tol %.0e)",
                exact ? "yes" : "NO", first, reference, diff, kLossTol));
}

void loss_units() {
    constexpr double kLn2 = 0.6931471805599453, kTolLn = 1e-12, kAligned = 1e-6;
    const Matrix eq(2, 2, {1, 0, 1, 0});
    const double l2 = contrastive_loss({eq, eq, 4e-3}).loss;
    const Matrix ortho = Matrix::identity(8);
    const double la = contrastive_loss({ortho, ortho, 4e-3}).loss;
    verdict(std::abs(l2 - kLn2) <= kTolLn && la <= kAligned, "loss_units",
            fmt("equal logits N=2: %.16f (ln 2 = %.16f, tol %.0e); aligned orthonormal N=8, tau=4e-3: %.3e (<= %.0e)",
                l2, kLn2, kTolLn, la, kAligned));
}

void determinism() {
    // Default generator, shortened schedule: two identical runs and a 4-thread run.
    const SynthConfig sc;
    const Dataset data = gen_synthetic(sc).train;
    TrainConfig tc;
    tc.epochs = 2;
    auto run = [&](std::uint32_t threads) {
        TrainConfig c = tc;
        c.threads = threads;
        const TrainResult r = train_loop(data, c);
        return std::pair{encode_checkpoint({r.params, "epochs=2\n"}), trace_csv(r.trace)};
    };
    const auto a = run(1), b = run(1), c = run(4);
    const bool same = a == b, threads = a == c;
    verdict(same && threads, "determinism",
            fmt("repeat run identical checkpoint+trace: %s; --threads 4 identical: %s (%zu checkpoint bytes)",
                same ? "yes" : "NO", threads ? "yes" : "NO", a.first.size()));
}

// ---- training criteria -----------------------------------------------------

struct RunOutcome {
    RetrievalReport retrieval;
    EdgeRecovery edges;
    double seconds = 0.0;
};

RunOutcome synthetic_run(std::uint64_t seed, const AblationFlags& flags) {
    SynthConfig sc;
    sc.seed = seed;
    const SyntheticSplits s = gen_synthetic(sc);
    TrainConfig tc;
    tc.epochs = 100;
    tc.seed = seed;
    tc.flags = flags;
    const auto t = Clock::now();
    const TrainResult r = train_loop(s.train, tc);
    RunOutcome out;
    out.seconds = since(t);
    const Matrix pred = embed_all(s.test, r.params, flags);
    out.retrieval = retrieval_eval(pred, s.test.embeddings, 300, 30, seed);
    out.edges = edge_recovery_score(r.params, s.test.planted);
    std::printf("      run seed=%llu flags=%d%d%d: %.1fs image %.4f brain %.4f edge %.3f\n",
                static_cast<unsigned long long>(seed), flags.phase_shifting, flags.voxel_controlling,
                flags.measurement_projection, out.seconds, out.retrieval.image_top1, out.retrieval.brain_top1,
                out.edges.ratio);
    std::fflush(stdout);
    return out;
}

void training_criteria() {
    constexpr double kRetrieval = 0.5, kMinutes = 15.0, kEdge = 1.5;
    const std::uint64_t seeds[] = {1, 2, 3};
    const AblationFlags all{};
    std::map<std::uint64_t, RunOutcome> on;
    for (auto s : seeds) on[s] = synthetic_run(s, all);

    const RunOutcome& e2e = on[1];
    verdict(e2e.retrieval.image_top1 >= kRetrieval && e2e.retrieval.brain_top1 >= kRetrieval &&
                e2e.seconds <= kMinutes * 60.0,
            "end_to_end_retrieval",
            fmt("seed 1, 100 epochs: image %.4f brain %.4f (>= %.2f both), %.1fs (limit %.0f min)",
                e2e.retrieval.image_top1, e2e.retrieval.brain_top1, kRetrieval, e2e.seconds, kMinutes));

    bool edges_ok = true;
    std::string edge_detail;
    for (auto s : seeds) {
        edges_ok = edges_ok && !on[s].edges.degenerate && on[s].edges.ratio >= kEdge;
        edge_detail += fmt("seed %llu %.3f (planted %.4g / other %.4g); ", static_cast<unsigned long long>(s),
                           on[s].edges.ratio, on[s].edges.planted_mean, on[s].edges.other_mean);
    }
    verdict(edges_ok, "connectivity_recovery", edge_detail + fmt("need >= %.1f for 3 of 3", kEdge));

    struct Variant {
        const char* name;
        AblationFlags flags;
    };
    const Variant variants[] = {{"no-phase-shifting", {false, true, true}},
                                {"no-voxel-controlling", {true, false, true}},
                                {"no-measurement-projection", {true, true, false}}};
    auto score = [](const RunOutcome& o) { return 0.5 * (o.retrieval.image_top1 + o.retrieval.brain_top1); };
    double all_mean = 0.0;
    for (auto s : seeds) all_mean += score(on[s]) / 3.0;
    bool order_ok = true;
    std::string detail = fmt("mean two-way top-1 over seeds 1-3: all-on %.4f", all_mean);
    for (const auto& v : variants) {
        double m = 0.0;
        for (auto s : seeds) m += score(synthetic_run(s, v.flags)) / 3.0;
        const bool ok = all_mean >= m;
        order_ok = order_ok && ok;
        detail += fmt("; %s %.4f%s", v.name, m, ok ? "" : " (exceeds all-on)");
    }
    verdict(order_ok, "ablation_ordering", detail);
}

}  // namespace

int main(int argc, char** argv) {
    bool fast = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--fast") == 0) {
            fast = true;
        } else if (std::strcmp(argv[i], "--known") == 0 && i + 1 < argc) {
            std::istringstream list(argv[++i]);
            for (std::string name; std::getline(list, name, ',');) known.insert(name);
        } else {
            std::fprintf(stderr, "usage: %s [--fast] [--known name,...]\n", argv[0]);
            return 2;
        }
    }
    const auto t = Clock::now();
    oracle_equivalence();
    aggregation_equivalence();
    gradient_suite();
    identity_at_init();
    loss_units();
    determinism();
    if (!fast) training_criteria();
    std::printf("acceptance: %d failed, %d known failures, %.1fs total\n", failures, known_failures, since(t));
    return failures;
}
