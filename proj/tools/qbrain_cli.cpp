// qbrain: data generation, training, evaluation, connectivity export and the
// verification suites. Exit codes: 0 ok, 2 config, 3 I/O or input data,
// 4 numerical abort, 5 check failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qbrain/checkpoint.hpp"
#include "qbrain/checks.hpp"
#include "qbrain/config.hpp"
#include "qbrain/data.hpp"
#include "qbrain/errors.hpp"
#include "qbrain/eval.hpp"
#include "qbrain/fixtures.hpp"
#include "qbrain/train.hpp"

namespace fs = std::filesystem;
using namespace qbrain;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheck = 5;

// Config-backed flags are collected as raw strings and applied through the
// same key=value path as config files, after the file itself.
struct Overrides {
    std::optional<std::string> config_file;
    std::vector<std::pair<std::string, std::string>> values;

    RunConfig resolve() const {
        RunConfig cfg;
        if (config_file) apply_config_file(*config_file, cfg);
        for (const auto& [k, v] : values) apply_config_value(k, v, cfg);
        return cfg;
    }
};

void key_option(CLI::App* app, Overrides& ov, const std::string& key, const std::string& def,
                const std::string& help) {
    std::string flag = "--" + key;
    for (char& ch : flag)
        if (ch == '_') ch = '-';
    app->add_option_function<std::string>(
           flag, [&ov, key](const std::string& v) { ov.values.emplace_back(key, v); }, help)
        ->default_str(def)
        ->type_name("VALUE");
}

void add_config_file(CLI::App* app, Overrides& ov) {
    app->add_option("--config", ov.config_file, "key=value config file, applied before flags")->type_name("FILE");
}

void add_synth_options(CLI::App* app, Overrides& ov) {
    const SynthConfig d;
    key_option(app, ov, "voxels", std::to_string(d.voxels), "voxel count C");
    key_option(app, ov, "embed_dim", std::to_string(d.embed_dim), "target embedding width D");
    key_option(app, ov, "latent_dim", std::to_string(d.latent_dim), "latent width m");
    key_option(app, ov, "regions", std::to_string(d.regions), "region count R (must divide C)");
    key_option(app, ov, "edges", "ring r-(r+1)", "planted edges 'r-s;...' (s drives r)");
    key_option(app, ov, "interaction_strength", CLI::detail::to_string(d.interaction_strength), "gamma");
    key_option(app, ov, "noise_std", CLI::detail::to_string(d.noise_std), "sigma");
    key_option(app, ov, "n_train", std::to_string(d.n_train), "training samples");
    key_option(app, ov, "n_test", std::to_string(d.n_test), "test samples");
}

void add_train_options(CLI::App* app, Overrides& ov) {
    const TrainConfig d;
    key_option(app, ov, "lr_max", CLI::detail::to_string(d.lr_max), "peak learning rate");
    key_option(app, ov, "lr_min", CLI::detail::to_string(d.lr_min), "final learning rate");
    key_option(app, ov, "epochs", std::to_string(d.epochs), "training epochs");
    key_option(app, ov, "batch_size", std::to_string(d.batch_size), "batch size");
    key_option(app, ov, "tau", CLI::detail::to_string(d.tau), "contrastive temperature");
    key_option(app, ov, "weight_decay", CLI::detail::to_string(d.weight_decay), "decoupled weight decay");
    key_option(app, ov, "beta1", CLI::detail::to_string(d.beta1), "Adam beta1");
    key_option(app, ov, "beta2", CLI::detail::to_string(d.beta2), "Adam beta2");
    key_option(app, ov, "eps_adam", CLI::detail::to_string(d.eps_adam), "Adam epsilon");
    key_option(app, ov, "blocks", std::to_string(d.blocks), "connection blocks B");
}

void add_ablation_flags(CLI::App* app, Overrides& ov) {
    app->add_flag_callback("--no-phase-shifting", [&ov] { ov.values.emplace_back("phase_shifting", "false"); },
                           "pin the phase term (cos = 0)");
    app->add_flag_callback("--no-voxel-controlling",
                           [&ov] { ov.values.emplace_back("voxel_controlling", "false"); }, "drop the x*(W' x) term");
    app->add_flag_callback("--no-measurement-projection",
                           [&ov] { ov.values.emplace_back("measurement_projection", "false"); },
                           "drop the x*(W'' g) term");
}

void add_common(CLI::App* app, Overrides& ov) {
    add_config_file(app, ov);
    key_option(app, ov, "seed", "1", "RNG seed");
    key_option(app, ov, "threads", "1", "worker threads (results do not depend on it)");
}

int report_checks(const char* name, const CheckReport& r) {
    std::printf("%s:\n%s", name, r.summary().c_str());
    return r.pass() ? 0 : kExitCheck;
}

void print_hash(const fs::path& p) { std::printf("sha256 %s  %s\n", sha256_file(p).c_str(), p.string().c_str()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-inspired voxel connectivity encoder"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand help for all subcommands");

    // gen-data
    Overrides gen_ov;
    std::string gen_out = "synthetic";
    auto* gen = app.add_subcommand("gen-data", "write <out>.train.qbrn and <out>.test.qbrn");
    add_common(gen, gen_ov);
    add_synth_options(gen, gen_ov);
    gen->add_option("--out", gen_out, "output prefix")->capture_default_str();

    // train
    Overrides train_ov;
    std::string train_data, train_out = "model.qbck", train_trace = "loss.csv";
    auto* train = app.add_subcommand("train", "train an encoder; writes a checkpoint and a loss CSV");
    add_common(train, train_ov);
    add_train_options(train, train_ov);
    add_ablation_flags(train, train_ov);
    train->add_option("--data", train_data, "training dataset (.qbrn)")->required();
    train->add_option("--out", train_out, "checkpoint path")->capture_default_str();
    train->add_option("--trace", train_trace, "loss trace CSV path")->capture_default_str();

    // eval retrieval
    auto* eval = app.add_subcommand("eval", "evaluation reports");
    eval->require_subcommand(1);
    Overrides eval_ov;
    std::string eval_ckpt, eval_data, eval_pred, eval_target, eval_csv;
    std::size_t candidates = 300, repeats = 30;
    auto* retrieval = eval->add_subcommand("retrieval", "two-way top-1 retrieval");
    add_common(retrieval, eval_ov);
    retrieval->add_option("--checkpoint", eval_ckpt, "trained checkpoint (with --data)");
    retrieval->add_option("--data", eval_data, "test dataset (.qbrn)");
    retrieval->add_option("--pred", eval_pred, "predicted embeddings (.qemb), instead of a checkpoint");
    retrieval->add_option("--target", eval_target, "target embeddings (.qemb)");
    retrieval->add_option("--candidates", candidates, "pool size per query")->capture_default_str();
    retrieval->add_option("--repeats", repeats, "protocol repeats")->capture_default_str();
    retrieval->add_option("--csv", eval_csv, "write the report CSV here instead of stdout");

    // export-conn
    std::string conn_ckpt, conn_out = "connectivity", conn_data;
    std::size_t conn_source = 0;
    std::optional<std::uint32_t> conn_regions;
    auto* conn = app.add_subcommand("export-conn", "export a connectivity map as CSV and PGM");
    conn->add_option("--checkpoint", conn_ckpt, "trained checkpoint")->required();
    conn->add_option("--source", conn_source, "source voxel (or region with --regions)")->capture_default_str();
    conn->add_option("--regions", conn_regions, "pool into R equal regions");
    conn->add_option("--out", conn_out, "output prefix for <out>.csv and <out>.pgm")->capture_default_str();
    conn->add_option("--data", conn_data, "dataset with planted-edge metadata; prints the recovery score");

    // check
    auto* check = app.add_subcommand("check", "verification suites");
    check->require_subcommand(1);
    std::size_t oracle_trials = 10000;
    std::uint64_t check_seed = 1;
    auto* oracle = check->add_subcommand("oracle", "closed form vs two-qubit simulation, plus aggregation");
    oracle->add_option("--trials", oracle_trials, "random tuples")->capture_default_str();
    oracle->add_option("--seed", check_seed, "RNG seed")->capture_default_str();
    GradCheckOptions grad_opts;
    auto* grad = check->add_subcommand("grad", "central-difference gradient checks");
    grad->add_option("--voxels", grad_opts.voxels, "encoder voxels C")->capture_default_str();
    grad->add_option("--dim", grad_opts.embed_dim, "embedding width D")->capture_default_str();
    grad->add_option("--blocks", grad_opts.blocks, "blocks B")->capture_default_str();
    grad->add_option("--step", grad_opts.step, "difference step h")->capture_default_str();
    grad->add_option("--tol", grad_opts.tolerance, "relative tolerance")->capture_default_str();
    grad->add_option("--seed", grad_opts.seed, "RNG seed")->capture_default_str();
    std::string manifest = "tests/fixtures/MANIFEST";
    auto* fixtures = check->add_subcommand("fixtures", "rehash committed fixtures");
    fixtures->add_option("--manifest", manifest, "fixture manifest")->capture_default_str();
    Overrides signal_ov;
    auto* signal = check->add_subcommand("signal", "generator self-test for the planted interaction");
    add_common(signal, signal_ov);
    add_synth_options(signal, signal_ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*gen) {
            const RunConfig cfg = gen_ov.resolve();
            const SyntheticSplits s = gen_synthetic(cfg.synth);
            std::cout << synth_config_echo(cfg.synth);
            const fs::path tr = gen_out + ".train.qbrn", te = gen_out + ".test.qbrn";
            write_dataset(s.train, tr);
            write_dataset(s.test, te);
            print_hash(tr);
            print_hash(te);
            return 0;
        }

        if (*train) {
            const RunConfig cfg = train_ov.resolve();
            cfg.train.validate();
            const Dataset data = read_dataset(train_data);
            std::cout << train_config_echo(cfg.train);
            const TrainResult res = train_loop(data, cfg.train, [&](const TraceRow& r) {
                if (r.step % 50 == 0) {
                    std::printf("epoch %u step %llu lr %.3e loss %.6f\n", r.epoch,
                                static_cast<unsigned long long>(r.step), r.lr, r.loss);
                    std::fflush(stdout);
                }
            });
            write_checkpoint({res.params, train_config_echo(cfg.train)}, train_out);
            write_trace_csv(res.trace, train_trace);
            std::printf("final loss %.6f\n", res.trace.back().loss);
            print_hash(train_out);
            print_hash(train_trace);
            return 0;
        }

        if (*retrieval) {
            const RunConfig cfg = eval_ov.resolve();
            Matrix pred, target;
            if (!eval_pred.empty() || !eval_target.empty()) {
                if (eval_pred.empty() || eval_target.empty() || !eval_ckpt.empty()) {
                    throw ConfigError("eval retrieval: give --pred and --target, or --checkpoint and --data");
                }
                pred = read_embeddings(eval_pred);
                target = read_embeddings(eval_target);
            } else {
                if (eval_ckpt.empty() || eval_data.empty()) {
                    throw ConfigError("eval retrieval: give --checkpoint and --data, or --pred and --target");
                }
                const Checkpoint ck = read_checkpoint(eval_ckpt);
                const TrainConfig tc = train_config_from_echo(ck.config_echo);
                const Dataset data = read_dataset(eval_data);
                pred = embed_all(data, ck.params, tc.flags, cfg.train.threads);
                target = data.embeddings;
            }
            const RetrievalReport rep = retrieval_eval(pred, target, candidates, repeats, cfg.train.seed);
            if (eval_csv.empty()) {
                std::cout << retrieval_csv(rep);
            } else {
                write_retrieval_csv(rep, eval_csv);
            }
            std::printf("image_top1 %.6f brain_top1 %.6f\n", rep.image_top1, rep.brain_top1);
            return 0;
        }

        if (*conn) {
            const Checkpoint ck = read_checkpoint(conn_ckpt);
            const ConnectivityMap map = connectivity_map(ck.params, conn_source, conn_regions);
            const fs::path csv = conn_out + ".csv", pgm = conn_out + ".pgm";
            write_influence_csv(map.influence, csv);
            write_pgm(map.full, pgm);
            print_hash(csv);
            print_hash(pgm);
            if (!conn_data.empty()) {
                const Dataset data = read_dataset(conn_data);
                const EdgeRecovery er = edge_recovery_score(ck.params, data.planted);
                std::printf("edge_recovery %.6f planted_mean %.6g other_mean %.6g%s\n", er.ratio, er.planted_mean,
                            er.other_mean, er.degenerate ? " (degenerate)" : "");
            }
            return 0;
        }

        if (*oracle) {
            const int a = report_checks("oracle", check_oracle(oracle_trials, check_seed));
            const int b = report_checks("aggregation", check_aggregation(100, 64, check_seed));
            return a ? a : b;
        }
        if (*grad) return report_checks("grad", check_gradients(grad_opts));
        if (*fixtures) {
            const FixtureReport rep = verify_fixtures(manifest);
            for (const auto& r : rep.results) {
                std::printf("%-40s %s\n", r.fixture.path.c_str(),
                            r.ok ? "ok" : ("MISMATCH (got " + r.actual_hash + ")").c_str());
            }
            std::printf("fixtures: %s\n", rep.pass() ? "pass" : "FAIL");
            return rep.pass() ? 0 : kExitCheck;
        }
        if (*signal) {
            const RunConfig cfg = signal_ov.resolve();
            const PlantedSignalReport r = planted_signal_selftest(cfg.synth);
            std::printf("planted signal mean %.6g se %.3g z %.2f %s\n", r.mean, r.standard_error, r.z_score,
                        r.pass ? "ok" : "FAIL");
            return r.pass ? 0 : kExitCheck;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const RangeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        // I/O, format and input-data problems.
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
