// advhash: command-line front end for training, compressing, attacking,
// defending and analysing networks.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 data or checkpoint load error, 4 numeric divergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advhash/advhash.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace advhash;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Every flag "--some-name" is also read from ADVHASH_SOME_NAME.
std::string env_for(const std::string& flag) {
    std::string e = "ADVHASH_";
    for (char c : flag) e += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return e;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
    return app->add_option("--" + name, value, help)->envname(env_for(name))->capture_default_str();
}

struct DataFlags {
    std::string mnist_dir;
    std::string train_images, train_labels, test_images, test_labels;
    std::string cifar_dir;

    void add(CLI::App* app, bool need_train) {
        flag(app, "mnist-dir", mnist_dir, "directory holding the four standard MNIST IDX files");
        if (need_train) {
            flag(app, "train-images", train_images, "MNIST training images (IDX)");
            flag(app, "train-labels", train_labels, "MNIST training labels (IDX)");
        }
        flag(app, "test-images", test_images, "MNIST test images (IDX)");
        flag(app, "test-labels", test_labels, "MNIST test labels (IDX)");
        flag(app, "cifar-dir", cifar_dir, "extracted cifar-10-batches-bin directory (replaces the MNIST flags)");
    }

    void resolve() {
        if (mnist_dir.empty()) return;
        const auto in = [&](const char* f) { return (fs::path(mnist_dir) / f).string(); };
        if (train_images.empty()) train_images = in("train-images-idx3-ubyte");
        if (train_labels.empty()) train_labels = in("train-labels-idx1-ubyte");
        if (test_images.empty()) test_images = in("t10k-images-idx3-ubyte");
        if (test_labels.empty()) test_labels = in("t10k-labels-idx1-ubyte");
    }

    Dataset load(bool train) {
        resolve();
        if (!cifar_dir.empty()) return load_cifar10_dir(cifar_dir, train);
        const std::string& img = train ? train_images : test_images;
        const std::string& lbl = train ? train_labels : test_labels;
        if (img.empty() || lbl.empty())
            throw ConfigError(std::string("no ") + (train ? "training" : "test") +
                              " data given (use --mnist-dir, the --" + (train ? "train" : "test") +
                              "-images/labels flags or --cifar-dir)");
        return load_mnist(img, lbl);
    }

    ordered_json paths() const {
        ordered_json j;
        if (!cifar_dir.empty()) {
            j["cifar_dir"] = cifar_dir;
            return j;
        }
        if (!train_images.empty()) j["train_images"] = train_images;
        if (!train_labels.empty()) j["train_labels"] = train_labels;
        j["test_images"] = test_images;
        j["test_labels"] = test_labels;
        return j;
    }
};

struct AttackFlags {
    std::string method = "fgsm";
    double eps_start = 0.1, eps_step = 0.1, eps_max = 0.5;
    std::size_t budget_start = 1, budget_step = 1, budget_max = 112;
    int target = -1;
    std::size_t samples = 1000;
    CLI::Option* eps_start_opt = nullptr;

    void add(CLI::App* app) {
        flag(app, "method", method, "attack family: fgsm or jsma (hashed models get the hashed variant)")
            ->check(CLI::IsMember({"fgsm", "jsma", "hfgsm", "hjsma"}));
        eps_start_opt = flag(app, "eps-start", eps_start, "first FGSM epsilon");
        flag(app, "eps-step", eps_step, "FGSM epsilon escalation step");
        flag(app, "eps-max", eps_max, "largest FGSM epsilon");
        flag(app, "budget-start", budget_start, "first JSMA element budget");
        flag(app, "budget-step", budget_step, "JSMA budget escalation step");
        flag(app, "budget-max", budget_max, "largest JSMA element budget");
        flag(app, "target", target, "JSMA target class (-1: runner-up of the clean prediction)");
        flag(app, "samples", samples, "inputs drawn from the test split");
    }

    CampaignConfig config(std::uint64_t seed) const {
        CampaignConfig c;
        c.method = parse_attack_method(method);
        c.eps_start = eps_start;
        // An explicit --eps-max below the default start means "sweep up to it".
        if (eps_start_opt->count() == 0 && eps_max < eps_start) c.eps_start = eps_max;
        c.eps_step = eps_step;
        c.eps_max = eps_max;
        c.i_start = budget_start;
        c.i_step = budget_step;
        c.i_max = budget_max;
        c.samples = samples;
        c.rng_seed = seed;
        if (target >= 0) c.target = target;
        c.validate();
        return c;
    }
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& t : split_list(s)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(t, &used));
            if (used != t.size()) throw std::invalid_argument(t);
        } catch (const std::exception&) {
            throw ConfigError(std::string("cannot parse ") + what + " value '" + t + "'");
        }
    }
    return out;
}

std::vector<std::size_t> parse_indices(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& v : parse_doubles(s, "layer index")) {
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
            throw ConfigError("layer index must be a non-negative integer");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

// Writes the manifest next to `out_base` and remembers its file name so
// that every artifact can point back at it.
class Manifest {
public:
    Manifest(std::string command, std::string out_base) : out_base_(std::move(out_base)) {
        j_["command"] = std::move(command);
        j_["toolkit_version"] = "0.1.0";
        start_ = std::chrono::steady_clock::now();
    }

    std::string path() const { return out_base_ + ".manifest.json"; }
    std::string name() const { return fs::path(path()).filename().string(); }
    ordered_json& operator[](const char* k) { return j_[k]; }

    void output(const std::string& p) { j_["outputs"].push_back(p); }

    // CSV artifacts start with a comment naming their manifest.
    std::string csv(const std::string& body) const { return "# manifest=" + name() + "\n" + body; }

    void write() {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        j_["wall_clock_seconds"] = secs;
        atomic_write(path(), j_.dump(2) + "\n");
    }

private:
    std::string out_base_;
    ordered_json j_;
    std::chrono::steady_clock::time_point start_;
};

std::string strip_ext(const std::string& path, const std::string& ext) {
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size());
    return path;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    std::string arch = "mnist-ref";
    std::string rate = "1";
    bool hash_conv = false;
    std::uint64_t seed = 1;
    double lr = 0.05;
    std::size_t batch_size = 32;
    std::size_t epochs = 3;
    double lr_decay = 0.7;
    std::size_t train_limit = 0;
    std::string out = "model.ckpt";
    DataFlags data;
};

void add_train_flags(CLI::App* app, TrainOptions& o, bool compress) {
    flag(app, "arch", o.arch, "preset name (mnist-ref, dnn1, dnn2, dnn3, vgg16) or architecture file");
    auto* r = flag(app, "rate", o.rate, "hash compression rate for fc layers, e.g. 1/8 (1 = dense)");
    if (compress) r->required();
    app->add_flag("--hash-conv", o.hash_conv, "also hash convolution layers")->envname(env_for("hash-conv"));
    flag(app, "seed", o.seed, "seed for initialization, hashing and shuffling");
    flag(app, "lr", o.lr, "SGD learning rate");
    flag(app, "batch-size", o.batch_size, "mini-batch size");
    flag(app, "epochs", o.epochs, "training epochs");
    flag(app, "lr-decay", o.lr_decay, "learning-rate factor applied after every epoch");
    flag(app, "train-limit", o.train_limit, "train on the first N training samples only (0 = all)");
    flag(app, "out", o.out, "checkpoint path; the loss curve goes to <out>.loss.csv");
    o.data.add(app, true);
}

int cmd_train(TrainOptions& o, const std::string& command) {
    ArchitectureSpec spec = load_architecture(o.arch);
    const CompressionRate rate = CompressionRate::parse(o.rate);
    if (!rate.dense()) spec = with_hash_rate(spec, rate, o.hash_conv);
    spec.validate();

    Dataset train_set = o.data.load(true);
    const Dataset test_set = o.data.load(false);
    const std::size_t full = train_set.size();
    if (o.train_limit > 0 && o.train_limit < full) train_set = train_set.head(o.train_limit);

    TrainConfig cfg{o.lr, o.batch_size, o.epochs, o.seed, o.lr_decay};
    const std::string base = strip_ext(o.out, ".ckpt");
    Manifest m(command, base);
    m["config"] = {{"arch", spec.name},      {"rate", rate.str()},       {"hash_conv", o.hash_conv},
                   {"lr", o.lr},             {"batch_size", o.batch_size}, {"epochs", o.epochs},
                   {"lr_decay", o.lr_decay}, {"train_samples", train_set.size()}};
    m["seeds"] = {{"seed", o.seed}};
    m["inputs"] = o.data.paths();
    if (train_set.size() < full)
        m["note"] = "trained on the first " + std::to_string(train_set.size()) + " of " + std::to_string(full) +
                    " training samples";

    Network net = Network::initialize(spec, o.seed);
    std::printf("%s: %zu parameter values stored (%s), %zu training samples\n", spec.name.c_str(),
                compression_report(net).stored_param_count, rate.str().c_str(), train_set.size());
    auto result = train(std::move(net), train_set, cfg, &test_set, [](const EpochStats& s) {
        std::printf("epoch %zu  lr %.5g  loss %.6f  test accuracy %.4f\n", s.epoch, s.learning_rate, s.train_loss,
                    s.test_accuracy.value_or(0.0));
        std::fflush(stdout);
    });

    std::string loss = csv_row({"epoch", "learning_rate", "train_loss", "test_accuracy"});
    for (const auto& s : result.curve)
        loss += csv_row({std::to_string(s.epoch), format_double(s.learning_rate), format_double(s.train_loss),
                         format_double(s.test_accuracy.value_or(0.0))});
    const std::string loss_path = base + ".loss.csv";
    const std::string note = command + " arch=" + spec.name + " rate=" + rate.str() + " seed=" + std::to_string(o.seed) +
                             " train_samples=" + std::to_string(train_set.size());
    save_checkpoint(result.network, o.out, note);
    atomic_write(loss_path, m.csv(loss));
    const double acc = result.curve.back().test_accuracy.value_or(0.0);
    m["results"] = {{"test_accuracy", acc}};
    m.output(o.out);
    m.output(loss_path);
    m.write();
    std::printf("final test accuracy %.4f\n", acc);
    return 0;
}

// ---------------------------------------------------------------- attack

struct AttackOptions {
    std::string checkpoint;
    std::uint64_t seed = 1;
    std::string out = "attack";
    DataFlags data;
    AttackFlags attack;
};

std::string model_id_of(const std::string& checkpoint) { return fs::path(checkpoint).stem().string(); }

int cmd_attack(AttackOptions& o) {
    Network net = load_checkpoint(o.checkpoint);
    const CampaignConfig cfg = o.attack.config(o.seed);
    const Dataset test = o.data.load(false);
    Manifest m("attack", o.out);
    m["config"] = {{"checkpoint", o.checkpoint}, {"method", to_string(cfg.method)}, {"samples", cfg.samples}};
    m["seeds"] = {{"seed", o.seed}};
    m["inputs"] = o.data.paths();

    const auto report = run_campaign(net, test, cfg, model_id_of(o.checkpoint));
    ordered_json summary = ordered_json::parse(campaign_summary_json(report));
    summary["manifest"] = m.name();
    atomic_write(o.out + ".csv", m.csv(campaign_records_csv(report)));
    atomic_write(o.out + ".json", summary.dump(2) + "\n");
    m.output(o.out + ".csv");
    m.output(o.out + ".json");
    m["results"] = {{"success_rate", report.success_rate}, {"filtered_success_rate", report.filtered_success_rate}};
    m.write();
    std::cout << campaign_curve_text(report);
    return 0;
}

// ---------------------------------------------------------------- defend

struct DefendOptions {
    std::string checkpoint;
    std::string taus = "0,0.01,0.05,0.1";
    std::string layers;
    std::uint64_t seed = 1;
    std::string out = "defense.csv";
    std::string save_dir;
    DataFlags data;
    AttackFlags attack;
};

int cmd_defend(DefendOptions& o) {
    Network net = load_checkpoint(o.checkpoint);
    const auto taus = parse_doubles(o.taus, "tau");
    const auto layers = parse_indices(o.layers);
    const CampaignConfig cfg = o.attack.config(o.seed);
    const Dataset test = o.data.load(false);
    Manifest m("defend", strip_ext(o.out, ".csv"));
    m["config"] = {{"checkpoint", o.checkpoint}, {"tau", taus}, {"layers", DefenseConfig{0.0, layers}.resolve(net)},
                   {"method", to_string(cfg.method)}, {"samples", cfg.samples}};
    m["seeds"] = {{"seed", o.seed}};
    m["inputs"] = o.data.paths();

    const std::string id = model_id_of(o.checkpoint);
    const auto rows = defense_sweep(net, test, taus, layers, cfg, id);
    atomic_write(o.out, m.csv(defense_sweep_csv(rows)));
    m.output(o.out);
    if (!o.save_dir.empty()) {
        for (double tau : taus) {
            const std::string p = (fs::path(o.save_dir) / (id + "_tau" + format_double(tau) + ".ckpt")).string();
            save_checkpoint(apply_gradient_inhibition(net, {tau, layers}), p, "defend tau=" + format_double(tau));
            m.output(p);
        }
    }
    m.write();
    std::printf("%10s  %14s  %12s\n", "tau", "clean_accuracy", "success");
    for (const auto& r : rows)
        std::printf("%10g  %13.2f%%  %11.2f%%\n", r.tau, 100.0 * r.clean_accuracy, 100.0 * r.success_rate);
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
    std::vector<std::string> checkpoints;
    std::vector<std::string> reports;
    std::string what = "weights";
    std::string layers;
    std::size_t bins = 101;
    std::size_t samples = 500;
    std::uint64_t seed = 1;
    std::string out = "analysis";
    DataFlags data;
};

// Rebuilds a campaign report from the CSV records and JSON summary written
// by `attack`; tensors are not stored there and stay empty.
AttackCampaignReport read_report(std::string prefix) {
    if (prefix.ends_with(".json")) prefix.resize(prefix.size() - 5);
    const auto summary = ordered_json::parse(read_text_file(prefix + ".json"));
    AttackCampaignReport rep;
    const std::string tag = summary.at("method").get<std::string>();
    rep.method = parse_attack_method(tag);
    rep.hashed = tag.front() == 'h';
    rep.model_id = summary.at("model_id").get<std::string>();
    const auto& c = summary.at("config");
    rep.config.method = rep.method;
    rep.config.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    if (rep.method == AttackMethod::fgsm) {
        rep.config.eps_start = c.at("eps_start").get<double>();
        rep.config.eps_step = c.at("eps_step").get<double>();
        rep.config.eps_max = c.at("eps_max").get<double>();
    } else {
        rep.config.i_start = c.at("i_start").get<std::size_t>();
        rep.config.i_step = c.at("i_step").get<std::size_t>();
        rep.config.i_max = c.at("i_max").get<std::size_t>();
    }
    std::istringstream in(read_text_file(prefix + ".csv"));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        const auto f = split_list(line);
        if (f.size() < 7) throw FormatError(prefix + ".csv", "short record line '" + line + "'");
        AdversarialRecord r;
        r.method = rep.method;
        r.sample_index = std::stoull(f[0]);
        if (rep.method == AttackMethod::fgsm) {
            r.final_epsilon = std::stod(f[2]);
        } else {
            r.final_count = std::stoull(f[2]);
        }
        r.clean_pred = std::stoi(f[3]);
        r.adv_pred = std::stoi(f[4]);
        r.success = f[5] == "1";
        r.true_label = std::stoi(f[6]);
        rep.records.push_back(std::move(r));
    }
    rep.config.samples = rep.records.size();
    for (const auto& r : rep.records) {
        rep.successes += r.success;
        rep.clean_correct += r.clean_pred == r.true_label;
    }
    return rep;
}

int cmd_analyze(AnalyzeOptions& o) {
    Manifest m("analyze", o.out);
    m["config"] = {{"what", o.what}, {"checkpoints", o.checkpoints}, {"reports", o.reports}};
    m["seeds"] = {{"seed", o.seed}};
    if (o.what == "curves") {
        if (o.reports.empty()) throw ConfigError("--what curves needs at least one --report prefix");
        std::vector<AttackCampaignReport> reps;
        for (const auto& r : o.reports) reps.push_back(read_report(r));
        const auto table = assemble_success_curves(reps);
        atomic_write(o.out + "_curves.csv", m.csv(curve_table_csv(table)));
        atomic_write(o.out + "_curves.txt", curve_table_text(table));
        m.output(o.out + "_curves.csv");
        m.output(o.out + "_curves.txt");
        m.write();
        std::cout << curve_table_text(table);
        return 0;
    }
    if (o.checkpoints.empty()) throw ConfigError("--what " + o.what + " needs at least one --checkpoint");
    const auto layers = parse_indices(o.layers);
    std::optional<Dataset> chosen;
    if (o.what == "gradients") {
        chosen = select_samples(o.data.load(false), o.samples, o.seed);
        m["inputs"] = o.data.paths();
    }
    for (const auto& ck : o.checkpoints) {
        const Network net = load_checkpoint(ck);
        const std::string id = model_id_of(ck);
        if (o.what == "weights") {
            const auto h = weight_histogram(net, layers, o.bins);
            const std::string p = o.out + "_" + id + "_weights.csv";
            atomic_write(p, m.csv(histogram_csv(h)));
            m.output(p);
            std::printf("%s: %zu weights in [%.6g, %.6g] (range %.6g)\n", id.c_str(), h.total, h.min, h.max, h.range());
        } else if (o.what == "gradients") {
            const auto prof = gradient_amplitude_profile(net, *chosen, id);
            const std::string p = o.out + "_" + id + "_gradients.csv";
            atomic_write(p, m.csv(profile_csv(prof)));
            m.output(p);
            std::printf("%s: %.2f%% of |dJ/dx| in [1e-10, inf), %.2f%% in [1e-25, 1e-15), mean %.6g\n", id.c_str(),
                        100.0 * prof.large_fraction(), 100.0 * prof.small_fraction(), prof.mean_abs);
        } else {
            throw ConfigError("--what must be weights, gradients or curves");
        }
    }
    m.write();
    return 0;
}

// ---------------------------------------------------------------- info

int cmd_info(const std::string& checkpoint) {
    CheckpointInfo info;
    const Network net = load_checkpoint(checkpoint, &info);
    const auto rep = compression_report(net);
    std::printf("checkpoint version %u, seed %llu\nnote: %s\n\n", info.version,
                static_cast<unsigned long long>(info.seed), info.note.c_str());
    std::cout << net.architecture().to_text() << "\n";
    std::printf("virtual weights %zu, stored weights %zu, footprint %.6f\n", rep.virtual_param_count,
                rep.stored_param_count, rep.footprint_ratio);
    return 0;
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"advhash: hashed-network compression, adversarial attacks and gradient inhibition"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    TrainOptions train_o;
    auto* train_cmd = app.add_subcommand("train", "train a network and write a checkpoint plus loss CSV");
    add_train_flags(train_cmd, train_o, false);

    TrainOptions compress_o;
    compress_o.rate = "1/8";
    auto* compress_cmd = app.add_subcommand("compress", "train a hashed network (train with a required --rate)");
    add_train_flags(compress_cmd, compress_o, true);

    AttackOptions attack_o;
    auto* attack_cmd = app.add_subcommand(
        "attack", "escalating FGSM/JSMA campaign; writes <out>.csv (sample_index,method,final_epsilon_or_count,"
                  "clean_pred,adv_pred,success,true_label) and <out>.json");
    flag(attack_cmd, "checkpoint", attack_o.checkpoint, "model to attack")->required();
    flag(attack_cmd, "seed", attack_o.seed, "seed for sample selection");
    flag(attack_cmd, "out", attack_o.out, "output prefix");
    attack_o.data.add(attack_cmd, false);
    attack_o.attack.add(attack_cmd);

    DefendOptions defend_o;
    auto* defend_cmd = app.add_subcommand(
        "defend", "gradient inhibition sweep; CSV columns tau,clean_accuracy,success_rate,method,model_id,"
                  "filtered_success_rate");
    flag(defend_cmd, "checkpoint", defend_o.checkpoint, "model to defend")->required();
    flag(defend_cmd, "tau", defend_o.taus, "comma-separated inhibition coefficients");
    flag(defend_cmd, "layers", defend_o.layers, "comma-separated layer indices (default: last fc layer)");
    flag(defend_cmd, "seed", defend_o.seed, "seed for sample selection");
    flag(defend_cmd, "out", defend_o.out, "sweep CSV path");
    flag(defend_cmd, "save-defended", defend_o.save_dir, "directory for defended checkpoints (optional)");
    defend_o.data.add(defend_cmd, false);
    defend_o.attack.add(defend_cmd);

    AnalyzeOptions analyze_o;
    auto* analyze_cmd = app.add_subcommand(
        "analyze", "weights: <out>_<model>_weights.csv (bin_lo,bin_hi,count,fraction); gradients: "
                   "<out>_<model>_gradients.csv with decade bins; curves: <out>_curves.csv (model_id,method,"
                   "sweep_value,success_rate,filtered_success_rate,successes,samples)");
    analyze_cmd->add_option("--checkpoint", analyze_o.checkpoints, "checkpoint(s) to analyse")
        ->envname(env_for("checkpoint"));
    analyze_cmd->add_option("--report", analyze_o.reports, "attack output prefix(es) or their .json summaries, for --what curves")
        ->envname(env_for("report"));
    flag(analyze_cmd, "what", analyze_o.what, "weights, gradients or curves")
        ->check(CLI::IsMember({"weights", "gradients", "curves"}));
    flag(analyze_cmd, "layers", analyze_o.layers, "comma-separated layer indices for weights (default: all)");
    flag(analyze_cmd, "bins", analyze_o.bins, "weight histogram bins");
    flag(analyze_cmd, "samples", analyze_o.samples, "test samples for gradient profiles");
    flag(analyze_cmd, "seed", analyze_o.seed, "seed for sample selection");
    flag(analyze_cmd, "out", analyze_o.out, "output prefix");
    analyze_o.data.add(analyze_cmd, false);

    std::string info_ck;
    auto* info_cmd = app.add_subcommand("info", "print a checkpoint's architecture and storage");
    flag(info_cmd, "checkpoint", info_ck, "checkpoint to inspect")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    if (*train_cmd) return guarded([&] { return cmd_train(train_o, "train"); });
    if (*compress_cmd) return guarded([&] { return cmd_train(compress_o, "compress"); });
    if (*attack_cmd) return guarded([&] { return cmd_attack(attack_o); });
    if (*defend_cmd) return guarded([&] { return cmd_defend(defend_o); });
    if (*analyze_cmd) return guarded([&] { return cmd_analyze(analyze_o); });
    if (*info_cmd) return guarded([&] { return cmd_info(info_ck); });
    return kExitOther;
}
