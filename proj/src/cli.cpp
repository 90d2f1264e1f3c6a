#include "maneuverlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "maneuverlab/checkpoint.hpp"
#include "maneuverlab/config.hpp"
#include "maneuverlab/digest.hpp"
#include "maneuverlab/dlg.hpp"
#include "maneuverlab/error.hpp"
#include "maneuverlab/eval.hpp"
#include "maneuverlab/signals.hpp"
#include "maneuverlab/stationarity.hpp"
#include "maneuverlab/tnc.hpp"

namespace mlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Failure that should surface as a plain message with exit code 1.
class RunError : public mlab::Error {
public:
    using mlab::Error::Error;
};

// ---------------------------------------------------------------- manifests

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
};

void write_manifest(const fs::path& where, const Manifest& m) {
    json j;
    j["tool"] = "maneuverlab";
    j["command"] = m.command;
    j["argv"] = m.argv;
    if (m.config) {
        j["config"] = *m.config;
        j["config_hash"] = sha256_hex(*m.config);
    } else {
        j["config"] = nullptr;
        j["config_hash"] = nullptr;
    }
    if (m.seed) {
        j["seed"] = *m.seed;
    } else {
        j["seed"] = nullptr;
    }
    j["inputs"] = json::object();
    for (const auto& p : m.inputs) {
        j["inputs"][p.string()] = sha256_file(p);
    }
    j["outputs"] = json::object();
    for (const auto& p : m.outputs) {
        j["outputs"][p.string()] = sha256_file(p);
    }
    j["manifest"] = where.string();
    std::ofstream out(where);
    if (!out) {
        throw RunError("cannot write manifest " + where.string());
    }
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) {
        throw RunError("cannot read " + p.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw RunError("malformed manifest " + p.string() + ": " + e.what());
    }
}

fs::path file_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

// ---------------------------------------------------------------- helpers

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw RunError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

void require_file(const std::string& what, const fs::path& p) {
    if (!fs::is_regular_file(p)) {
        throw RunError(what + " not found: " + p.string());
    }
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) {
        ensure_dir(p.parent_path());
    }
    std::ofstream out(p);
    if (!out) {
        throw RunError("cannot write " + p.string());
    }
    return out;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ConfigFlags {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "key=value configuration file");
        app->add_option("--set", sets, "override one key (key=value); repeatable");
        app->add_option("--seed", seed, "run seed (overrides config and MANEUVERLAB_SEED)");
    }

    [[nodiscard]] TrainConfig resolve() const {
        std::vector<std::pair<std::string, std::string>> overrides;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + s + "'");
            }
            overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (seed) {
            overrides.emplace_back("seed", std::to_string(*seed));
        }
        std::optional<fs::path> path;
        if (!config.empty()) {
            require_file("config file", config);
            path = config;
        }
        return load_config(path, overrides);
    }

    void add_inputs(Manifest& m) const {
        if (!config.empty()) {
            m.inputs.emplace_back(config);
        }
    }
};

signals::MultivariateSeries load_series(const fs::path& p) {
    require_file("data file", p);
    return signals::load_csv(p);
}

struct LoadedModel {
    std::string kind;
    std::optional<nets::Encoder> tnc;
    std::optional<dlg::DlgModel> dlg;
};

LoadedModel load_model(const fs::path& p) {
    require_file("checkpoint", p);
    const auto ck = load_checkpoint(p);
    auto it = ck.meta.find("kind");
    if (it == ck.meta.end()) {
        throw FormatError("checkpoint " + p.string() + " has no model kind");
    }
    LoadedModel m{it->second, {}, {}};
    if (m.kind == "tnc") {
        m.tnc = tnc::load_tnc_encoder(ck);
    } else if (m.kind == "dlg") {
        m.dlg = dlg::load_dlg(ck);
    } else {
        throw FormatError("checkpoint " + p.string() + " has unknown kind '" + m.kind + "'");
    }
    return m;
}

eval::RepresentationSet encode(const LoadedModel& m, const signals::MultivariateSeries& series) {
    eval::RepresentationSet rep;
    rep.source = m.kind;
    const auto& spec = m.tnc ? m.tnc->spec() : m.dlg->nets.enc_local.spec();
    rep.window = spec.window;
    const auto batch = signals::make_windows(series, spec.window);
    rep.starts = batch.start_indices;
    if (m.tnc) {
        rep.Z = nets::encode_windows(*m.tnc, batch.windows);
    } else {
        rep.Z = nets::encode_windows(m.dlg->nets.enc_local, batch.windows);
        rep.z_global = nets::encode_windows(m.dlg->nets.enc_global, batch.windows);
    }
    return rep;
}

eval::EvalOptions eval_options(const TrainConfig& cfg) {
    eval::EvalOptions o;
    o.probe.split = cfg.train_split;
    o.probe.epochs = cfg.probe_epochs;
    o.probe.batch = cfg.batch;
    o.probe.lr = cfg.lr;
    o.probe.dropout = cfg.dropout;
    o.probe.classes = signals::kStateCount;
    o.probe.seed = derive_seed(cfg.seed, "probe");
    o.clusters = cfg.clusters;
    o.seed = derive_seed(cfg.seed, "clusters");
    return o;
}

std::vector<int> timestep_labels(const signals::MultivariateSeries& s, const TrainConfig& cfg) {
    if (s.labels) {
        return *s.labels;
    }
    return *signals::label_states(s, cfg.label_window, cfg.adf_threshold).labels;
}

void write_reconstruction(const fs::path& p, const signals::MultivariateSeries& s, const dlg::Reconstruction& r) {
    auto out = open_out(p);
    out << "t,a_lat,a_lon,a_lat_hat,a_lon_hat,sigma_lat,sigma_lon\n";
    for (std::size_t t = 0; t < s.length(); ++t) {
        out << t << ',' << num(s.values(0, t)) << ',' << num(s.values(1, t)) << ',' << num(r.values(0, t)) << ','
            << num(r.values(1, t)) << ',' << num(r.sigma[0]) << ',' << num(r.sigma[1]) << '\n';
    }
}

// ---------------------------------------------------------------- commands

struct Options {
    // global
    std::string replay;
    bool force = false;
    // synth
    std::string preset = "four-state";
    std::string out;
    std::optional<std::uint64_t> synth_seed;
    double missing_rate = 0.0;
    // data-driven commands
    std::string data;
    std::size_t window = 250;
    double threshold = 0.01;
    std::string convention = "reject";
    std::string out_dir = ".";
    std::string checkpoint;
    std::string tnc_ckpt;
    std::string dlg_ckpt;
    ConfigFlags cfg;
};

int cmd_synth(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    std::uint64_t seed = 0;
    if (o.synth_seed) {
        seed = *o.synth_seed;
    } else if (const char* env = std::getenv("MANEUVERLAB_SEED"); env && *env) {
        seed = std::strtoull(env, nullptr, 10);
    }
    auto sc = signals::preset(o.preset, seed);
    sc.missing_rate = o.missing_rate;
    const auto s = signals::synthesize(sc);
    if (fs::path(o.out).has_parent_path()) {
        ensure_dir(fs::path(o.out).parent_path());
    }
    signals::write_csv(o.out, s);
    write_manifest(file_manifest(o.out), {"synth", argv,
                                          "preset=" + o.preset + "\nmissing_rate=" + num(o.missing_rate) + "\n", seed,
                                          {}, {o.out}});
    out << "wrote " << o.out << " (" << s.length() << " samples)\n";
    return kExitOk;
}

int cmd_label(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    auto s = load_series(o.data);
    const auto conv = o.convention == "above" ? signals::StationarityConvention::PValueAbove
                                              : signals::StationarityConvention::RejectUnitRoot;
    const auto labeled = signals::label_states(s, o.window, o.threshold, conv);
    if (fs::path(o.out).has_parent_path()) {
        ensure_dir(fs::path(o.out).parent_path());
    }
    signals::write_csv(o.out, labeled);
    write_manifest(file_manifest(o.out),
                   {"label", argv,
                    "window=" + std::to_string(o.window) + "\nthreshold=" + num(o.threshold) +
                        "\nconvention=" + o.convention + "\n",
                    std::nullopt, {o.data}, {o.out}});
    out << "wrote " << o.out << '\n';
    return kExitOk;
}

int cmd_adf(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto s = load_series(o.data);
    const auto batch = signals::make_windows(s, o.window);
    std::ostringstream csv;
    csv << "start,feature,statistic,p_value,lags\n";
    for (std::size_t w = 0; w < batch.size(); ++w) {
        for (std::size_t f = 0; f < s.features(); ++f) {
            const std::size_t start = batch.start_indices[w];
            std::vector<double> x(batch.valid_lengths[w]);
            for (std::size_t c = 0; c < x.size(); ++c) {
                x[c] = s.values(f, start + c);
            }
            csv << start << ',' << signals::kFeatureNames[f] << ',';
            try {
                const auto r = stationarity::adf_test(x);
                csv << num(r.statistic) << ',' << num(r.p_value) << ',' << r.lags_used << '\n';
            } catch (const mlab::Error&) {
                csv << "NA,NA,NA\n";
            }
        }
    }
    if (o.out.empty()) {
        out << csv.str();
        return kExitOk;
    }
    open_out(o.out) << csv.str();
    write_manifest(file_manifest(o.out),
                   {"adf", argv, "window=" + std::to_string(o.window) + "\n", std::nullopt, {o.data}, {o.out}});
    return kExitOk;
}

int cmd_train_tnc(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto cfg = o.cfg.resolve();
    const auto s = signals::normalize(load_series(o.data));
    const auto model = tnc::train_tnc(cfg, s);
    const fs::path dir(o.out_dir);
    ensure_dir(dir);
    const auto ckpt = dir / "tnc.ckpt";
    const auto log = dir / "tnc_log.csv";
    save_checkpoint(ckpt, tnc::tnc_checkpoint(model, cfg));
    {
        auto f = open_out(log);
        f << "epoch,train_loss,heldout_loss,disc_accuracy\n";
        for (const auto& e : model.log) {
            f << e.epoch << ',' << num(e.train_loss) << ',' << num(e.heldout_loss) << ',' << num(e.disc_accuracy)
              << '\n';
        }
    }
    Manifest m{"train-tnc", argv, cfg.to_text(), cfg.seed, {o.data}, {ckpt, log}};
    o.cfg.add_inputs(m);
    write_manifest(dir / "train-tnc.manifest.json", m);
    if (!model.log.empty()) {
        const auto& last = model.log.back();
        out << "train-tnc: " << model.log.size() << " epochs, train loss " << num(last.train_loss)
            << ", held-out accuracy " << num(last.disc_accuracy) << '\n';
    }
    return kExitOk;
}

int cmd_train_dlg(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto cfg = o.cfg.resolve();
    const auto s = signals::normalize(load_series(o.data));
    const auto model = dlg::train_dlg(cfg, s);
    const fs::path dir(o.out_dir);
    ensure_dir(dir);
    const auto ckpt = dir / "dlg.ckpt";
    const auto log = dir / "dlg_log.csv";
    save_checkpoint(ckpt, dlg::dlg_checkpoint(model, cfg));
    {
        auto f = open_out(log);
        f << "epoch,total,mse,kl_local,kl_global,l_reg,heldout_mse\n";
        for (const auto& e : model.log) {
            f << e.epoch << ',' << num(e.total) << ',' << num(e.mse) << ',' << num(e.kl_local) << ','
              << num(e.kl_global) << ',' << num(e.l_reg) << ',' << num(e.heldout_mse) << '\n';
        }
    }
    Manifest m{"train-dlg", argv, cfg.to_text(), cfg.seed, {o.data}, {ckpt, log}};
    o.cfg.add_inputs(m);
    write_manifest(dir / "train-dlg.manifest.json", m);
    if (!model.log.empty()) {
        out << "train-dlg: " << model.log.size() << " epochs, held-out mse " << num(model.log.back().heldout_mse)
            << '\n';
    }
    return kExitOk;
}

int cmd_encode(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto model = load_model(o.checkpoint);
    const auto s = signals::normalize(load_series(o.data));
    const auto rep = encode(model, s);
    auto f = open_out(o.out);
    f << "start";
    for (std::size_t j = 0; j < rep.Z.cols; ++j) {
        f << ",z" << j;
    }
    if (rep.z_global) {
        for (std::size_t j = 0; j < rep.z_global->cols; ++j) {
            f << ",g" << j;
        }
    }
    f << '\n';
    for (std::size_t i = 0; i < rep.Z.rows; ++i) {
        f << rep.starts[i];
        for (std::size_t j = 0; j < rep.Z.cols; ++j) {
            f << ',' << num(rep.Z(i, j));
        }
        if (rep.z_global) {
            for (std::size_t j = 0; j < rep.z_global->cols; ++j) {
                f << ',' << num((*rep.z_global)(i, j));
            }
        }
        f << '\n';
    }
    f.close();
    write_manifest(file_manifest(o.out), {"encode", argv, std::nullopt, std::nullopt, {o.checkpoint, o.data}, {o.out}});
    out << "wrote " << o.out << " (" << rep.Z.rows << " windows)\n";
    return kExitOk;
}

struct Evaluated {
    eval::Report report;
    std::vector<fs::path> inputs;
    std::optional<dlg::DlgModel> dlg;
    signals::MultivariateSeries series;
    TrainConfig cfg;
};

Evaluated evaluate_models(const Options& o, const std::string& command) {
    if (o.tnc_ckpt.empty() && o.dlg_ckpt.empty()) {
        throw RunError(command + ": missing artifact: no checkpoint given (pass --tnc and/or --dlg)");
    }
    for (const auto& p : {o.tnc_ckpt, o.dlg_ckpt}) {
        if (!p.empty() && !fs::is_regular_file(p)) {
            throw RunError(command + ": missing artifact: checkpoint " + p + " not found");
        }
    }
    Evaluated ev;
    ev.cfg = o.cfg.resolve();
    ev.series = signals::normalize(load_series(o.data));
    const auto labels = timestep_labels(ev.series, ev.cfg);
    std::vector<eval::RepresentationSet> reps;
    ev.inputs.emplace_back(o.data);
    for (const auto& p : {o.tnc_ckpt, o.dlg_ckpt}) {
        if (p.empty()) {
            continue;
        }
        auto model = load_model(p);
        reps.push_back(encode(model, ev.series));
        ev.inputs.emplace_back(p);
        if (model.dlg) {
            ev.dlg = std::move(model.dlg);
        }
    }
    ev.report = eval::evaluate_all(reps, ev.series, labels, eval_options(ev.cfg));
    return ev;
}

int cmd_evaluate(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto ev = evaluate_models(o, "evaluate");
    const fs::path csv = o.out.empty() ? fs::path("report.csv") : fs::path(o.out);
    open_out(csv) << ev.report.csv();
    Manifest m{"evaluate", argv, ev.cfg.to_text(), ev.cfg.seed, ev.inputs, {csv}};
    o.cfg.add_inputs(m);
    write_manifest(file_manifest(csv), m);
    out << ev.report.table();
    return kExitOk;
}

int cmd_reconstruct(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto model = load_model(o.checkpoint);
    if (!model.dlg) {
        throw RunError("reconstruct: checkpoint " + o.checkpoint + " is not a DLG model");
    }
    const auto s = signals::normalize(load_series(o.data));
    const auto r = dlg::reconstruct(*model.dlg, s);
    write_reconstruction(o.out, s, r);
    write_manifest(file_manifest(o.out),
                   {"reconstruct", argv, std::nullopt, std::nullopt, {o.checkpoint, o.data}, {o.out}});
    out << "wrote " << o.out << '\n';
    return kExitOk;
}

int cmd_report(const Options& o, const std::vector<std::string>& argv, std::ostream& out) {
    const auto ev = evaluate_models(o, "report");
    const fs::path dir(o.out_dir);
    ensure_dir(dir);
    std::vector<fs::path> outputs{dir / "report.csv", dir / "report.txt"};
    open_out(outputs[0]) << ev.report.csv();
    open_out(outputs[1]) << ev.report.table();
    if (ev.dlg) {
        outputs.push_back(dir / "reconstruction.csv");
        write_reconstruction(outputs.back(), ev.series, dlg::reconstruct(*ev.dlg, ev.series));
    }
    Manifest m{"report", argv, ev.cfg.to_text(), ev.cfg.seed, ev.inputs, outputs};
    o.cfg.add_inputs(m);
    write_manifest(dir / "report.manifest.json", m);
    out << ev.report.table();
    return kExitOk;
}

int replay(const Options& o, std::ostream& out, std::ostream& err) {
    const json before = read_json(o.replay);
    bool tampered = false;
    for (const auto& [path, digest] : before.at("inputs").items()) {
        std::string now;
        try {
            now = sha256_file(path);
        } catch (const mlab::Error&) {
            now = "<missing>";
        }
        if (now != digest.get<std::string>()) {
            tampered = true;
            err << "replay: input " << path << " does not match the recorded digest\n";
        }
    }
    if (tampered && !o.force) {
        throw RunError("replay: inputs changed since the recorded run (use --force to rerun anyway)");
    }
    if (!before.at("seed").is_null()) {
        const auto seed = std::to_string(before.at("seed").get<std::uint64_t>());
        ::setenv("MANEUVERLAB_SEED", seed.c_str(), 1);
    }
    const auto argv = before.at("argv").get<std::vector<std::string>>();
    const int rc = run(argv, out, err);
    if (rc != kExitOk) {
        return rc;
    }
    const json after = read_json(before.at("manifest").get<std::string>());
    bool same = true;
    for (const auto& [path, digest] : before.at("outputs").items()) {
        if (!after.at("outputs").contains(path) || after.at("outputs").at(path) != digest) {
            same = false;
            err << "replay: output " << path << " differs from the recorded run\n";
        }
    }
    if (!same && !tampered) {
        return kExitFailure;
    }
    out << "replay: " << (same ? "outputs identical to the recorded run" : "outputs differ (inputs were forced)")
        << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Representation learning for vehicle acceleration signals", "maneuverlab"};
    app.require_subcommand(0, 1);
    app.add_option("--replay", o.replay, "rerun the command recorded in a manifest, verifying input digests");
    app.add_flag("--force", o.force, "with --replay: rerun even if inputs changed");

    auto* synth = app.add_subcommand("synth", "generate a synthetic series with planted states");
    synth->add_option("--preset", o.preset, "four-state | two-state")->check(CLI::IsMember({"four-state", "two-state"}));
    synth->add_option("--out", o.out, "output CSV")->required();
    synth->add_option("--seed", o.synth_seed, "seed");
    synth->add_option("--missing-rate", o.missing_rate, "fraction of cells masked out")->check(CLI::Range(0.0, 0.99));

    auto* label = app.add_subcommand("label", "label timesteps by per-feature stationarity");
    label->add_option("--data", o.data, "input CSV")->required();
    label->add_option("--out", o.out, "output CSV")->required();
    label->add_option("--window", o.window, "block length")->check(CLI::PositiveNumber);
    label->add_option("--threshold", o.threshold, "ADF p-value threshold");
    label->add_option("--convention", o.convention, "reject: p <= threshold is stationary; above: p > threshold")
        ->check(CLI::IsMember({"reject", "above"}));

    auto* adf = app.add_subcommand("adf", "per-window ADF statistics");
    adf->add_option("--data", o.data, "input CSV")->required();
    adf->add_option("--window", o.window, "window length")->check(CLI::PositiveNumber);
    adf->add_option("--out", o.out, "output CSV (stdout when omitted)");

    auto* train_tnc = app.add_subcommand("train-tnc", "train the contrastive model");
    train_tnc->add_option("--data", o.data, "input CSV")->required();
    train_tnc->add_option("--out-dir", o.out_dir, "output directory");
    o.cfg.attach(train_tnc);

    auto* train_dlg = app.add_subcommand("train-dlg", "train the generative model");
    train_dlg->add_option("--data", o.data, "input CSV")->required();
    train_dlg->add_option("--out-dir", o.out_dir, "output directory");
    o.cfg.attach(train_dlg);

    auto* enc = app.add_subcommand("encode", "write per-window representations");
    enc->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required();
    enc->add_option("--data", o.data, "input CSV")->required();
    enc->add_option("--out", o.out, "output CSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "downstream metrics for trained models");
    evaluate->add_option("--tnc", o.tnc_ckpt, "TNC checkpoint");
    evaluate->add_option("--dlg", o.dlg_ckpt, "DLG checkpoint");
    evaluate->add_option("--data", o.data, "input CSV")->required();
    evaluate->add_option("--out", o.out, "report CSV (default report.csv)");
    o.cfg.attach(evaluate);

    auto* recon = app.add_subcommand("reconstruct", "decode a series through a DLG model");
    recon->add_option("--checkpoint", o.checkpoint, "DLG checkpoint")->required();
    recon->add_option("--data", o.data, "input CSV")->required();
    recon->add_option("--out", o.out, "output CSV")->required();

    auto* report = app.add_subcommand("report", "metrics table plus plot data in one directory");
    report->add_option("--tnc", o.tnc_ckpt, "TNC checkpoint");
    report->add_option("--dlg", o.dlg_ckpt, "DLG checkpoint");
    report->add_option("--data", o.data, "input CSV")->required();
    report->add_option("--out-dir", o.out_dir, "output directory");
    o.cfg.attach(report);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (!o.replay.empty()) {
            if (!app.get_subcommands().empty()) {
                err << "maneuverlab: --replay cannot be combined with a subcommand\n";
                return kExitUsage;
            }
            return replay(o, out, err);
        }
        if (app.get_subcommands().empty()) {
            err << app.help();
            return kExitUsage;
        }
        const auto* sub = app.get_subcommands().front();
        if (sub == synth) return cmd_synth(o, args, out);
        if (sub == label) return cmd_label(o, args, out);
        if (sub == adf) return cmd_adf(o, args, out);
        if (sub == train_tnc) return cmd_train_tnc(o, args, out);
        if (sub == train_dlg) return cmd_train_dlg(o, args, out);
        if (sub == enc) return cmd_encode(o, args, out);
        if (sub == evaluate) return cmd_evaluate(o, args, out);
        if (sub == recon) return cmd_reconstruct(o, args, out);
        if (sub == report) return cmd_report(o, args, out);
    } catch (const mlab::Error& e) {
        err << "maneuverlab: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "maneuverlab: unexpected failure: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, std::cout, std::cerr);
}

}  // namespace mlab::cli
