#include "rfadex/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rfadex/attack.hpp"
#include "rfadex/data.hpp"
#include "rfadex/detect.hpp"
#include "rfadex/error.hpp"
#include "rfadex/model.hpp"
#include "rfadex/rng.hpp"
#include "rfadex/signal.hpp"
#include "rfadex/training.hpp"

namespace rfadex::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Collected while a command runs and written next to its primary output.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    json seeds = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    void write(const fs::path& primary_output, double wall_seconds, std::ostream& out) {
        fs::path path = primary_output;
        path += ".manifest.json";
        outputs.push_back(path.string());
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::ostringstream stamp;
        stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
        json j = {{"command", command},         {"argv", argv},
                  {"config", config},           {"seeds", seeds},
                  {"inputs", inputs},           {"outputs", outputs},
                  {"tool_version", kVersion},   {"finished_at", stamp.str()},
                  {"wall_clock_seconds", wall_seconds}};
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw FormatError(FormatErrc::io, "cannot write " + path.string());
        f << j.dump(2) << '\n';
        out << "manifest: " << path.string() << '\n';
    }
};

std::pair<double, double> parse_snr_range(const std::string& text) {
    auto parse_one = [&](const std::string& s) {
        if (s == "inf" || s == "+inf") return kNoiseless;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw UsageError("cannot parse SNR '" + s + "'");
        }
        if (used != s.size() || !std::isfinite(v)) throw UsageError("cannot parse SNR '" + s + "'");
        return v;
    };
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        const double v = parse_one(text);
        return {v, v};
    }
    const double lo = parse_one(text.substr(0, colon));
    const double hi = parse_one(text.substr(colon + 1));
    if (hi < lo) throw UsageError("SNR range upper bound is below the lower bound");
    if (std::isinf(lo) != std::isinf(hi)) throw UsageError("SNR range cannot mix finite and inf bounds");
    return {lo, hi};
}

std::vector<ModClass> parse_classes(const std::string& text) {
    if (text == "all") return {kAllModClasses.begin(), kAllModClasses.end()};
    std::vector<ModClass> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto c = parse_mod_class(item);
        if (!c) throw UsageError("unknown class name '" + item + "'");
        if (std::find(out.begin(), out.end(), *c) == out.end()) out.push_back(*c);
    }
    if (out.empty()) throw UsageError("empty class list");
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<int> parse_target(const std::string& text) {
    if (text.empty()) return std::nullopt;
    if (const auto c = parse_mod_class(text)) return code(*c);
    throw UsageError("unknown target class '" + text + "'");
}

int classes_in(const Dataset& ds) {
    int top = 0;
    for (const auto& r : ds.records) top = std::max(top, code(r.label));
    return std::max(2, top + 1);
}

AttackConfig make_attack(const std::string& method, double eps, int steps, double step_size,
                         const std::string& target) {
    AttackConfig cfg;
    if (method == "fgsm")
        cfg.kind = AttackKind::fgsm;
    else if (method == "bim")
        cfg.kind = AttackKind::bim;
    else
        throw UsageError("unknown attack method '" + method + "'");
    cfg.epsilon = eps;
    cfg.steps = steps;
    cfg.step_size = step_size > 0.0 ? step_size : 2.5 * eps / std::max(1, steps);
    cfg.target = parse_target(target);
    if (cfg.kind == AttackKind::bim && eps == 0.0 && step_size <= 0.0) cfg.step_size = 1.0;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void print_counts(const Dataset& ds, std::ostream& out) {
    const auto counts = class_counts(ds);
    for (auto c : kAllModClasses)
        if (counts[static_cast<std::size_t>(code(c))] > 0)
            out << "  " << name(c) << ": " << counts[static_cast<std::size_t>(code(c))] << '\n';
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string classes = "all";
    int per_class = 0;
    std::string snr = "14:20";
    std::uint64_t seed = 1;
    int sps = 10;
    double rolloff = 0.35;
    int span = 8;
    double cfo = 0.0;
    std::string out;
};

void cmd_generate(const GenerateArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (a.per_class < 1) throw UsageError("--per-class must be >= 1");
    const auto classes = parse_classes(a.classes);
    const auto [lo, hi] = parse_snr_range(a.snr);
    ShapingParams shaping{a.sps, a.rolloff, a.span};
    try {
        shaping.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    FrameOptions opts;
    opts.max_cfo = a.cfo;

    Dataset ds;
    std::ostringstream prov;
    prov << "generate classes=" << a.classes << " per_class=" << a.per_class << " snr=" << a.snr << " seed=" << a.seed
         << " sps=" << a.sps << " rolloff=" << a.rolloff << " span=" << a.span << " cfo=" << a.cfo;
    ds.provenance = prov.str();
    ds.records.reserve(classes.size() * static_cast<std::size_t>(a.per_class));
    for (auto c : classes) {
        for (int i = 0; i < a.per_class; ++i) {
            Rng rng(derive_seed(a.seed, {static_cast<std::uint64_t>(code(c)), static_cast<std::uint64_t>(i)}));
            const double snr = std::isinf(lo) ? kNoiseless : lo + (hi - lo) * rng.uniform();
            ds.records.push_back(to_record(generate_frame(c, snr, shaping, rng.next(), opts)));
        }
    }
    write_dataset(ds, a.out);

    manifest.config = {{"classes", a.classes}, {"per_class", a.per_class}, {"snr", a.snr}, {"sps", a.sps},
                       {"rolloff", a.rolloff}, {"span", a.span},           {"cfo", a.cfo}};
    manifest.seeds = {{"seed", a.seed}};
    manifest.outputs = {a.out, a.out + ".meta.json"};
    out << "wrote " << ds.size() << " records to " << a.out << '\n';
    print_counts(ds, out);
    manifest.write(a.out, seconds_since(start), out);
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string test;
    double split = 0.8;
    double min_snr = 14.0;
    int epochs = 20;
    int batch = 128;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    int classes = 0;
    std::string init;
    std::optional<double> adversarial;
    int adv_epochs = 10;
    double mix = 0.5;
    std::string out;
    std::string history;
};

void cmd_train(const TrainArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (a.adversarial && (!std::isfinite(*a.adversarial) || *a.adversarial < 0.0))
        throw UsageError("--adversarial must be a non-negative epsilon");
    if (a.mix < 0.0 || a.mix > 1.0) throw UsageError("--mix must lie in [0, 1]");

    Dataset all = filter_min_snr(read_dataset(a.data), a.min_snr);
    manifest.inputs.push_back(a.data);
    if (all.empty()) throw DomainError("no training records with snr >= " + std::to_string(a.min_snr));
    Dataset train_ds, test_ds;
    if (!a.test.empty()) {
        train_ds = std::move(all);
        test_ds = filter_min_snr(read_dataset(a.test), a.min_snr);
        manifest.inputs.push_back(a.test);
    } else {
        if (!(a.split > 0.0 && a.split < 1.0)) throw UsageError("--split must lie in (0, 1)");
        std::tie(train_ds, test_ds) = split_dataset(all, SplitSpec{a.split, a.seed});
    }

    Model model;
    if (!a.init.empty()) {
        model = read_checkpoint(a.init);
        manifest.inputs.push_back(a.init);
    } else {
        const int classes = a.classes > 0 ? a.classes : classes_in(train_ds);
        model = init_model("default_cnn", a.seed, classes);
    }

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.learning_rate = a.lr;
    cfg.seed = a.seed;
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    auto progress = [&](const EpochStats& s, const Model&) {
        out << "epoch " << s.epoch << " loss " << s.loss << " train_acc " << s.train_accuracy;
        if (s.test_accuracy) out << " test_acc " << *s.test_accuracy;
        out << '\n' << std::flush;
    };
    const Dataset* test_ptr = test_ds.empty() ? nullptr : &test_ds;

    std::vector<EpochStats> history;
    // With --adversarial and a pre-trained --init, only the retraining phase runs.
    if (!a.adversarial || a.init.empty()) {
        auto r = train(std::move(model), train_ds, cfg, test_ptr, progress);
        model = std::move(r.model);
        history = std::move(r.history);
    }
    if (a.adversarial) {
        AttackConfig attack;
        attack.epsilon = *a.adversarial;
        TrainConfig adv_cfg = cfg;
        adv_cfg.epochs = a.adv_epochs;
        adv_cfg.seed = derive_seed(a.seed, {0xADu});
        auto r = adversarial_train(std::move(model), train_ds, attack, adv_cfg, a.mix, test_ptr,
                                   [&](const EpochStats& s, const Model& m) {
                                       EpochStats shifted = s;
                                       shifted.epoch += static_cast<int>(history.size());
                                       progress(shifted, m);
                                   });
        model = std::move(r.model);
        const int offset = static_cast<int>(history.size());
        for (auto s : r.history) {
            s.epoch += offset;
            history.push_back(s);
        }
    }

    write_checkpoint(model, a.out);
    const std::string history_path = a.history.empty() ? a.out + ".history.csv" : a.history;
    write_history_csv(history, history_path);

    json results = json::object();
    if (test_ptr) {
        const double clean = evaluate(model, test_ds).accuracy;
        out << "test accuracy " << clean << '\n';
        results["test_accuracy"] = clean;
        if (a.adversarial) {
            AttackConfig attack;
            attack.epsilon = *a.adversarial;
            const double adv = adversarial_accuracy(model, test_ds, attack);
            out << "adversarial test accuracy (fgsm eps=" << *a.adversarial << ") " << adv << '\n';
            results["adversarial_test_accuracy"] = adv;
        }
    }
    manifest.config = {{"epochs", a.epochs},     {"batch", a.batch},         {"lr", a.lr},
                       {"split", a.split},       {"min_snr", a.min_snr},     {"classes", model.class_count()},
                       {"adv_epochs", a.adv_epochs}, {"mix", a.mix},         {"results", results}};
    if (a.adversarial) manifest.config["adversarial_eps"] = *a.adversarial;
    manifest.seeds = {{"seed", a.seed}};
    manifest.outputs = {a.out, history_path};
    manifest.write(a.out, seconds_since(start), out);
}

// ---- attack -----------------------------------------------------------------

struct AttackArgs {
    std::string model;
    std::string data;
    double eps = 0.1;
    std::string method = "fgsm";
    int steps = 5;
    double step_size = 0.0;
    std::string target;
    std::string out;
};

void cmd_attack(const AttackArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (!std::isfinite(a.eps) || a.eps < 0.0) throw UsageError("--eps must be a non-negative number");
    const auto cfg = make_attack(a.method, a.eps, a.steps, a.step_size, a.target);
    const Model model = read_checkpoint(a.model);
    const Dataset ds = read_dataset(a.data);
    if (ds.empty()) throw DomainError("dataset " + a.data + " is empty");
    check_labels(model, ds);
    if (cfg.target && *cfg.target >= model.class_count()) throw UsageError("--target is not a model class");

    const Dataset adv = attack_dataset(model, ds, cfg);
    write_dataset(adv, a.out);
    const double before = evaluate(model, ds).accuracy;
    const double after = evaluate(model, adv).accuracy;
    double worst = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        worst = std::max(worst, linf_distance(ds.records[i].values, adv.records[i].values));

    out << "attack: " << cfg.describe() << '\n'
        << "accuracy before " << before << " after " << after << " drop " << (before - after) << '\n'
        << "max linf perturbation " << worst << '\n';
    manifest.inputs = {a.model, a.data};
    manifest.outputs = {a.out, a.out + ".meta.json"};
    manifest.config = {{"attack", cfg.describe()},
                       {"eps", cfg.epsilon},
                       {"method", a.method},
                       {"steps", cfg.steps},
                       {"step_size", cfg.step_size},
                       {"results", {{"accuracy_before", before}, {"accuracy_after", after}, {"max_linf", worst}}}};
    manifest.write(a.out, seconds_since(start), out);
}

// ---- detect -----------------------------------------------------------------

struct DetectArgs {
    std::string model;
    std::string legit;
    std::string adv;
    std::string calib;
    std::string stat = "both";
    std::vector<std::size_t> subsets = {50, 200};
    double alpha = 0.01;
    std::uint64_t seed = 1;
    std::string out;
};

std::vector<StatKind> parse_stats(const std::string& s) {
    if (s == "both") return {StatKind::papr, StatKind::entropy};
    if (s == "papr") return {StatKind::papr};
    if (s == "entropy") return {StatKind::entropy};
    throw UsageError("--stat must be papr, entropy or both");
}

void cmd_detect(const DetectArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const auto kinds = parse_stats(a.stat);
    if (a.subsets.empty()) throw UsageError("--subset needs at least one size");
    for (auto s : a.subsets)
        if (s == 0) throw UsageError("--subset sizes must be positive");
    const Model model = read_checkpoint(a.model);
    const Dataset legit = read_dataset(a.legit);
    const Dataset adv = read_dataset(a.adv);
    manifest.inputs = {a.model, a.legit, a.adv};
    if (legit.empty() || adv.empty()) throw DomainError("legitimate and adversarial datasets must be non-empty");
    check_labels(model, legit);
    check_labels(model, adv);

    KSReport combined;
    json screening = json::object();
    for (auto kind : kinds) {
        const auto lg = build_stat_samples(legit, model, kind, Source::legitimate);
        const auto ag = build_stat_samples(adv, model, kind, Source::adversarial);
        for (auto s : a.subsets) {
            KSReport r;
            try {
                r = run_report(lg, ag, s, a.seed);
            } catch (const InvalidArgument& e) {
                throw DomainError(e.what());
            }
            combined.rows.insert(combined.rows.end(), r.rows.begin(), r.rows.end());
            for (const auto& n : r.notices)
                if (std::find(combined.notices.begin(), combined.notices.end(), n) == combined.notices.end())
                    combined.notices.push_back(n);
        }
        if (!a.calib.empty()) {
            const Dataset calib = read_dataset(a.calib);
            const Calibration cal(build_stat_samples(calib, model, kind, Source::legitimate), a.alpha);
            auto rate = [&](const Dataset& ds) {
                std::size_t flagged = 0, checked = 0;
                for (const auto& rec : ds.records) {
                    const auto z = forward<float>(model, rec.values);
                    const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
                    if (!cal.has_class(pred)) continue;
                    ++checked;
                    if (detect_point(model, rec.values, cal).verdict == Verdict::suspect) ++flagged;
                }
                return checked ? static_cast<double>(flagged) / static_cast<double>(checked) : 0.0;
            };
            const double legit_rate = rate(legit);
            const double adv_rate = rate(adv);
            out << to_string(kind) << " screening (alpha " << a.alpha << "): suspect rate legit " << legit_rate
                << " adversarial " << adv_rate << '\n';
            screening[to_string(kind)] = {{"legit_suspect_rate", legit_rate}, {"adversarial_suspect_rate", adv_rate}};
        }
    }
    for (const auto& n : combined.notices) out << "notice: " << n << '\n';
    write_ks_csv(combined, a.out);
    for (const auto& row : combined.rows)
        out << to_string(row.kind) << ' ' << row.class_label << " subset " << row.subset_size << ": p(full) "
            << row.at(Instance::full).p_value << " p(subset) " << row.at(Instance::subset).p_value
            << " p(control) " << row.at(Instance::control).p_value << '\n';

    if (!a.calib.empty()) manifest.inputs.push_back(a.calib);
    manifest.outputs = {a.out};
    manifest.config = {{"stat", a.stat}, {"subsets", a.subsets}, {"alpha", a.alpha}, {"screening", screening}};
    manifest.seeds = {{"seed", a.seed}};
    manifest.write(a.out, seconds_since(start), out);
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
    std::string model;
    std::string data;
    std::string mode = "simplex";
    std::string source = "legit";
    std::string out;
};

void cmd_report(const ReportArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (a.mode != "simplex" && a.mode != "simplex3" && a.mode != "summary")
        throw UsageError("--mode must be simplex, simplex3 or summary");
    if (a.source != "legit" && a.source != "adversarial") throw UsageError("--source must be legit or adversarial");
    const Model model = read_checkpoint(a.model);
    if (a.mode == "simplex3" && model.class_count() != 3)
        throw DomainError("simplex3 mode plots the 3-class probability simplex, but this model has " +
                          std::to_string(model.class_count()) + " classes; train on data generated with --classes bpsk,qpsk,8psk");
    const Dataset ds = read_dataset(a.data);
    manifest.inputs = {a.model, a.data};
    const auto ev = evaluate(model, ds);
    const auto classes = static_cast<std::size_t>(model.class_count());

    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw FormatError(FormatErrc::io, "cannot write " + a.out);
    f.precision(9);
    json results = json::object();
    if (a.mode == "summary") {
        f << "kind,true_class,predicted_class,value\n";
        if (!ds.empty()) f << "accuracy,,," << ev.accuracy << '\n';
        for (std::size_t t = 0; t < classes; ++t)
            for (std::size_t p = 0; p < classes; ++p)
                f << "confusion," << name(static_cast<ModClass>(t)) << ',' << name(static_cast<ModClass>(p)) << ','
                  << ev.confusion[t][p] << '\n';
        out << "accuracy " << ev.accuracy << " over " << ds.size() << " records\n";
        results["accuracy"] = ev.accuracy;
    } else {
        f << "record_id,label";
        for (std::size_t c = 1; c <= classes; ++c) f << ",p" << c;
        f << ",source\n";
        double entropy_sum = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            f << i << ',' << name(ds.records[i].label);
            for (double p : ev.softmax[i]) f << ',' << p;
            f << ',' << a.source << '\n';
            entropy_sum += softmax_entropy(ev.softmax[i]);
        }
        const double mean_entropy = ds.empty() ? 0.0 : entropy_sum / static_cast<double>(ds.size());
        out << "records " << ds.size() << " mean softmax entropy " << mean_entropy << " nats\n";
        results["mean_entropy"] = mean_entropy;
        results["accuracy"] = ev.accuracy;
    }
    manifest.outputs = {a.out};
    manifest.config = {{"mode", a.mode}, {"source", a.source}, {"results", results}};
    manifest.write(a.out, seconds_since(start), out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"RF modulation adversarial-example workbench", "rfadex"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "synthesise a labelled I/Q dataset");
    g->add_option("--classes", gen.classes, "all or comma list of bpsk,qpsk,8psk,16qam");
    g->add_option("--per-class", gen.per_class, "frames per class")->required();
    g->add_option("--snr", gen.snr, "SNR range lo:hi in dB (inf for noiseless)");
    g->add_option("--seed", gen.seed);
    g->add_option("--sps", gen.sps, "samples per symbol");
    g->add_option("--rolloff", gen.rolloff, "RRC rolloff");
    g->add_option("--span", gen.span, "RRC span in symbols");
    g->add_option("--cfo", gen.cfo, "max |carrier offset| in cycles/sample");
    g->add_option("--out", gen.out)->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train the CNN (optionally with adversarial retraining)");
    t->add_option("--data", tr.data)->required();
    t->add_option("--test", tr.test, "held-out dataset; otherwise --split is used");
    t->add_option("--split", tr.split, "train fraction when --test is absent");
    t->add_option("--min-snr", tr.min_snr, "drop records below this SNR (dB)");
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch", tr.batch);
    t->add_option("--lr", tr.lr);
    t->add_option("--seed", tr.seed);
    t->add_option("--num-classes", tr.classes, "output classes (default: from data labels)");
    t->add_option("--init", tr.init, "start from this checkpoint");
    t->add_option("--adversarial", tr.adversarial, "FGSM epsilon for adversarial retraining");
    t->add_option("--adv-epochs", tr.adv_epochs, "epochs of adversarial retraining");
    t->add_option("--mix", tr.mix, "share of each minibatch replaced by adversarial examples");
    t->add_option("--out", tr.out)->required();
    t->add_option("--history", tr.history, "history CSV (default OUT.history.csv)");

    AttackArgs at;
    auto* a = app.add_subcommand("attack", "write an adversarial copy of a dataset");
    a->add_option("--model", at.model)->required();
    a->add_option("--data", at.data)->required();
    a->add_option("--eps", at.eps);
    a->add_option("--method", at.method, "fgsm or bim");
    a->add_option("--steps", at.steps, "BIM iterations");
    a->add_option("--step-size", at.step_size, "BIM step (default 2.5 eps / steps)");
    a->add_option("--target", at.target, "targeted mode: class to push towards");
    a->add_option("--out", at.out)->required();

    DetectArgs de;
    auto* d = app.add_subcommand("detect", "KS tests between legitimate and adversarial statistics");
    d->add_option("--model", de.model)->required();
    d->add_option("--legit", de.legit)->required();
    d->add_option("--adv", de.adv)->required();
    d->add_option("--calib", de.calib, "held-out legitimate data for per-point screening");
    d->add_option("--stat", de.stat, "papr, entropy or both");
    d->add_option("--subset", de.subsets, "subset sizes")->delimiter(',');
    d->add_option("--alpha", de.alpha, "screening band tail mass");
    d->add_option("--seed", de.seed);
    d->add_option("--out", de.out)->required();

    ReportArgs re;
    auto* r = app.add_subcommand("report", "softmax simplex dumps and accuracy summaries");
    r->add_option("--model", re.model)->required();
    r->add_option("--data", re.data)->required();
    r->add_option("--mode", re.mode, "simplex, simplex3 or summary");
    r->add_option("--source", re.source, "legit or adversarial (recorded in the CSV)");
    r->add_option("--out", re.out)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return usage_error;
    }

    RunManifest manifest;
    manifest.argv = args;
    try {
        if (g->parsed()) {
            manifest.command = "generate";
            cmd_generate(gen, manifest, out);
        } else if (t->parsed()) {
            manifest.command = "train";
            cmd_train(tr, manifest, out);
        } else if (a->parsed()) {
            manifest.command = "attack";
            cmd_attack(at, manifest, out);
        } else if (d->parsed()) {
            manifest.command = "detect";
            cmd_detect(de, manifest, out);
        } else if (r->parsed()) {
            manifest.command = "report";
            cmd_report(re, manifest, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage_error;
    } catch (const InvalidArgument& e) {
        err << "usage error: " << e.what() << '\n';
        return usage_error;
    } catch (const FormatError& e) {
        err << "data error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return data_error;
    } catch (const DomainError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return internal_error;
    }
    return ok;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace rfadex::cli
