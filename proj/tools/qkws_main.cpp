// qkws: hybrid classical-quantum keyword spotting toolkit.
//
// Subcommands: synth (bundled tone dataset), manifest (dataset audit),
// train (four regimes incl. classical-to-quantum transfer), eval (with
// optional noise channels), gradcheck (finite-difference vs parameter-shift
// cross-validation).
//
// Exit codes: 0 success, 1 check failure, 2 usage error, 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qkws/audiodata.hpp"
#include "qkws/gradcheck.hpp"
#include "qkws/hybrid.hpp"
#include "qkws/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string message;
};

qkws::NoiseSpec parse_noise(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw CliError{2, "noise must look like depolarizing:0.01"};
    }
    const std::string channel = text.substr(0, colon);
    qkws::NoiseSpec spec;
    if (channel == "depolarizing") {
        spec.channel = qkws::NoiseChannel::Depolarizing;
    } else if (channel == "bit_flip") {
        spec.channel = qkws::NoiseChannel::BitFlip;
    } else if (channel == "phase_flip") {
        spec.channel = qkws::NoiseChannel::PhaseFlip;
    } else {
        throw CliError{2, "unknown noise channel: " + channel};
    }
    try {
        spec.probability = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw CliError{2, "bad noise probability in: " + text};
    }
    if (spec.probability < 0.0 || spec.probability > 1.0) {
        throw CliError{2, "noise probability must be in [0, 1]"};
    }
    return spec;
}

qkws::Regime parse_regime(const std::string& text) {
    if (text == "baseline_cnn_dnn") return qkws::Regime::BaselineCnnDnn;
    if (text == "cnn_qnn_scratch") return qkws::Regime::CnnQnnScratch;
    if (text == "cnn_qnn_2") return qkws::Regime::CnnQnn2;
    if (text == "cnn_qnn_3") return qkws::Regime::CnnQnn3;
    throw CliError{2, "unknown regime: " + text};
}

ordered_json noise_json(const std::optional<qkws::NoiseSpec>& noise) {
    if (!noise) return nullptr;
    ordered_json j;
    switch (noise->channel) {
    case qkws::NoiseChannel::Depolarizing: j["channel"] = "depolarizing"; break;
    case qkws::NoiseChannel::BitFlip: j["channel"] = "bit_flip"; break;
    case qkws::NoiseChannel::PhaseFlip: j["channel"] = "phase_flip"; break;
    }
    j["probability"] = noise->probability;
    return j;
}

struct TrainArgs {
    std::string regime_text;
    std::string data_dir;
    std::string out_dir;
    std::string from_model;
    std::uint64_t seed = 1;
    int epochs = -1; // resolved by regime
    std::size_t batch_size = 256;
    int wires = 8;
    int layers = 4;
    std::string grad = "shift";
    double eps = 1e-3;
    std::string noise_text;
    std::string optimizer = "adam";
    double lr = 1e-3;
    double lr_quantum = 1e-2;
};

int run_train(const TrainArgs& args) {
    const qkws::Regime regime = parse_regime(args.regime_text);
    const bool needs_source =
        regime == qkws::Regime::CnnQnn2 || regime == qkws::Regime::CnnQnn3;
    if (needs_source && args.from_model.empty()) {
        throw CliError{2, "regime " + args.regime_text +
                              " requires --from <pretrained cnn_dnn model>"};
    }

    std::optional<qkws::NoiseSpec> noise;
    if (!args.noise_text.empty()) noise = parse_noise(args.noise_text);
    if (noise && regime == qkws::Regime::BaselineCnnDnn) {
        throw CliError{2, "noise is only valid for CNN-QNN regimes"};
    }

    const auto wall_start = std::chrono::steady_clock::now();
    qkws::Dataset data = qkws::load_dataset(args.data_dir, args.seed);

    qkws::ModelConfig config;
    config.n_classes = data.n_classes();
    config.n_wires = args.wires;
    config.n_layers = args.layers;

    qkws::HybridModel model = [&] {
        switch (regime) {
        case qkws::Regime::BaselineCnnDnn:
            return qkws::build_model(qkws::ModelKind::CnnDnn, config, args.seed);
        case qkws::Regime::CnnQnnScratch:
            return qkws::build_model(qkws::ModelKind::CnnQnn, config, args.seed);
        default: {
            qkws::HybridModel source = qkws::load_model(args.from_model);
            return qkws::transfer_cnn(source, regime, config, args.seed);
        }
        }
    }();

    qkws::TrainConfig train_cfg;
    train_cfg.regime = regime;
    train_cfg.epochs = args.epochs >= 0
                           ? static_cast<std::size_t>(args.epochs)
                           : (needs_source ? 15 : 30);
    train_cfg.batch_size = args.batch_size;
    train_cfg.optimizer =
        args.optimizer == "sgd" ? qkws::OptKind::SGD : qkws::OptKind::Adam;
    train_cfg.lr_classical = args.lr;
    train_cfg.lr_quantum = args.lr_quantum;
    train_cfg.grad_method = args.grad == "fd" ? qkws::GradMethod::FiniteDiff
                                              : qkws::GradMethod::ParameterShift;
    train_cfg.eps = args.eps;
    train_cfg.seed = args.seed;
    train_cfg.noise = noise;

    qkws::TrainResult result = qkws::train(std::move(model), data, train_cfg);
    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    qkws::save_model(result.model, out / "model.qkws");

    {
        std::ofstream metrics(out / "metrics.jsonl");
        for (const auto& e : result.epochs) {
            ordered_json line;
            line["epoch"] = e.epoch;
            line["train_ce"] = e.train_ce;
            line["val_ce"] = e.val_ce;
            line["val_acc"] = e.val_acc;
            line["seconds"] = e.seconds;
            metrics << line.dump() << "\n";
        }
    }

    double best_val_acc = 0.0;
    for (const auto& e : result.epochs) {
        if (e.val_ce == result.best_val_ce) {
            best_val_acc = e.val_acc;
            break;
        }
    }

    ordered_json report;
    report["command"] = "train";
    report["config"]["regime"] = args.regime_text;
    report["config"]["data"] = args.data_dir;
    report["config"]["from"] = args.from_model;
    report["config"]["seed"] = args.seed;
    report["config"]["epochs"] = train_cfg.epochs;
    report["config"]["batch_size"] = train_cfg.batch_size;
    report["config"]["n_wires"] = args.wires;
    report["config"]["n_layers"] = args.layers;
    report["config"]["n_classes"] = config.n_classes;
    report["config"]["grad"] = args.grad;
    report["config"]["eps"] = args.eps;
    report["config"]["noise"] = noise_json(noise);
    report["config"]["optimizer"] = args.optimizer;
    report["config"]["lr_classical"] = args.lr;
    report["config"]["lr_quantum"] = args.lr_quantum;
    report["result"]["best_val_ce"] = result.best_val_ce;
    report["result"]["best_val_acc"] = best_val_acc;
    report["result"]["trainable_params"] =
        qkws::trainable_param_count(result.model);
    report["result"]["total_params"] = qkws::total_param_count(result.model);
    report["result"]["wall_seconds"] = wall_seconds;

    std::ofstream(out / "report.json") << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return 0;
}

struct EvalArgs {
    std::string model_path;
    std::string data_dir;
    std::string split = "test";
    std::string noise_text;
    std::string out_file;
    std::uint64_t seed = 1;
};

int run_eval(const EvalArgs& args) {
    std::optional<qkws::NoiseSpec> noise;
    if (!args.noise_text.empty()) noise = parse_noise(args.noise_text);

    qkws::HybridModel model = qkws::load_model(args.model_path);
    if (noise && model.kind == qkws::ModelKind::CnnDnn) {
        throw CliError{2, "--noise is not valid for a cnn_dnn model"};
    }

    qkws::SplitPart part;
    if (args.split == "validation") {
        part = qkws::SplitPart::Validation;
    } else if (args.split == "test") {
        part = qkws::SplitPart::Test;
    } else {
        throw CliError{2, "--split must be validation or test"};
    }

    qkws::Dataset data = qkws::load_dataset(args.data_dir, args.seed);
    if (data.n_classes() != model.config.n_classes) {
        throw CliError{2, "dataset has " + std::to_string(data.n_classes()) +
                              " classes but the model was built for " +
                              std::to_string(model.config.n_classes)};
    }

    const qkws::EvalReport report = qkws::evaluate(model, data, part, noise);

    ordered_json j;
    j["command"] = "eval";
    j["config"]["model"] = args.model_path;
    j["config"]["data"] = args.data_dir;
    j["config"]["split"] = args.split;
    j["config"]["noise"] = noise_json(noise);
    j["config"]["seed"] = args.seed;
    j["config"]["kind"] = qkws::to_string(model.kind);
    j["result"]["cross_entropy"] = report.cross_entropy;
    j["result"]["accuracy"] = report.accuracy;
    j["result"]["trainable_params"] = report.trainable_param_count;
    j["result"]["total_params"] = qkws::total_param_count(model);
    j["result"]["sample_count"] = report.sample_count;

    if (!args.out_file.empty()) {
        std::ofstream(args.out_file) << j.dump(2) << "\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_gradcheck_cmd(std::uint64_t seed, double eps, int trials) {
    const qkws::GradCheckReport report = qkws::run_gradcheck(seed, eps, trials);
    std::cout << "quantum  max relative error: " << report.max_rel_error_quantum
              << " (" << report.worst_quantum_site << ")\n";
    std::cout << "classical max relative error: "
              << report.max_rel_error_classical << " ("
              << report.worst_classical_site << ")\n";
    if (!report.pass()) {
        std::cout << "FAIL: max relative error " << report.max_rel_error()
                  << " exceeds 1e-4\n";
        return 1;
    }
    std::cout << "OK: max relative error " << report.max_rel_error()
              << " below 1e-4\n";
    return 0;
}

int run_manifest(const std::string& data_dir, const std::string& out_file,
                 std::uint64_t seed) {
    if (!fs::is_directory(data_dir)) {
        throw CliError{2, "dataset root does not exist: " + data_dir};
    }
    qkws::Dataset data = qkws::load_dataset(data_dir, seed);
    if (out_file.empty()) {
        qkws::write_manifest(data, std::cout);
    } else {
        std::ofstream out(out_file);
        qkws::write_manifest(data, out);
    }
    std::cout << "labels: " << data.n_classes()
              << ", train: " << data.split.train.size()
              << ", validation: " << data.split.validation.size()
              << ", test: " << data.split.test.size() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid classical-quantum keyword spotting toolkit"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train one of the four regimes");
    train_cmd->add_option("--regime", train_args.regime_text,
                          "baseline_cnn_dnn | cnn_qnn_scratch | cnn_qnn_2 | cnn_qnn_3")
        ->required();
    train_cmd->add_option("--data", train_args.data_dir, "Dataset root")->required();
    train_cmd->add_option("--out", train_args.out_dir, "Output directory")->required();
    train_cmd->add_option("--from", train_args.from_model,
                          "Pretrained cnn_dnn container (transfer regimes)");
    train_cmd->add_option("--seed", train_args.seed, "Random seed");
    train_cmd->add_option("--epochs", train_args.epochs,
                          "Epochs (default: 30 from scratch, 15 fine-tuning)");
    train_cmd->add_option("--batch-size", train_args.batch_size, "Batch size");
    train_cmd->add_option("--wires", train_args.wires, "QNN wires");
    train_cmd->add_option("--layers", train_args.layers, "VQC layers");
    train_cmd->add_option("--grad", train_args.grad, "shift | fd")
        ->check(CLI::IsMember({"shift", "fd"}));
    train_cmd->add_option("--eps", train_args.eps, "Finite-difference step");
    train_cmd->add_option("--noise", train_args.noise_text,
                          "channel:probability, e.g. depolarizing:0.01");
    train_cmd->add_option("--opt", train_args.optimizer, "adam | sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    train_cmd->add_option("--lr", train_args.lr, "Classical learning rate");
    train_cmd->add_option("--lr-quantum", train_args.lr_quantum,
                          "VQC learning rate");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
    eval_cmd->add_option("--model", eval_args.model_path, "Model container")->required();
    eval_cmd->add_option("--data", eval_args.data_dir, "Dataset root")->required();
    eval_cmd->add_option("--split", eval_args.split, "validation | test");
    eval_cmd->add_option("--noise", eval_args.noise_text, "channel:probability");
    eval_cmd->add_option("--out", eval_args.out_file, "Report file");
    eval_cmd->add_option("--seed", eval_args.seed, "Split seed");

    std::uint64_t gc_seed = 0;
    double gc_eps = 1e-3;
    int gc_trials = 50;
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Cross-validate gradient paths");
    gradcheck_cmd->add_option("--seed", gc_seed, "Random seed");
    gradcheck_cmd->add_option("--eps", gc_eps, "Finite-difference step");
    gradcheck_cmd->add_option("--trials", gc_trials, "Random circuits");

    std::string manifest_data, manifest_out;
    std::uint64_t manifest_seed = 1;
    auto* manifest_cmd =
        app.add_subcommand("manifest", "Write the dataset audit manifest");
    manifest_cmd->add_option("--data", manifest_data, "Dataset root")->required();
    manifest_cmd->add_option("--out", manifest_out, "Manifest file (default stdout)");
    manifest_cmd->add_option("--seed", manifest_seed, "Split seed");

    std::string synth_out;
    int synth_classes = 4, synth_clips = 50, synth_rate = 8000;
    double synth_seconds = 0.5;
    std::uint64_t synth_seed = 1;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate the synthetic tone dataset");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--classes", synth_classes, "Tone classes");
    synth_cmd->add_option("--clips", synth_clips, "Clips per class");
    synth_cmd->add_option("--seconds", synth_seconds, "Clip length");
    synth_cmd->add_option("--rate", synth_rate, "Sample rate");
    synth_cmd->add_option("--seed", synth_seed, "Random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) return run_train(train_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
        if (gradcheck_cmd->parsed())
            return run_gradcheck_cmd(gc_seed, gc_eps, gc_trials);
        if (manifest_cmd->parsed())
            return run_manifest(manifest_data, manifest_out, manifest_seed);
        if (synth_cmd->parsed()) {
            qkws::generate_tone_dataset(synth_out, synth_classes, synth_clips,
                                        synth_seconds, synth_rate, synth_seed);
            std::cout << "wrote " << synth_classes << " x " << synth_clips
                      << " clips under " << synth_out << "\n";
            return 0;
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const qkws::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const qkws::DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 2;
    } catch (const qkws::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const qkws::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
