// SPDX-License-Identifier: Apache-2.0
//
// passim — pinching-antenna system simulation and channel estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <passim/passim.hpp>

namespace {

using namespace passim;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitIo = 4;

struct Overrides {
    std::vector<std::pair<std::string, std::string>> entries;

    void parse(const std::vector<std::string> &sets) {
        for (const auto &s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + s + "'");
            entries.emplace_back(passim::detail::trim(s.substr(0, eq)), passim::detail::trim(s.substr(eq + 1)));
        }
    }

    std::vector<std::string> echo() const {
        std::vector<std::string> out;
        for (const auto &[k, v] : entries)
            out.push_back("override " + k + "=" + v);
        return out;
    }
};

// Dotted override keys: scene.*, channel.* and pilots.* address SystemConfig
// fields; train.* the TrainConfig; model.* the architecture configs.
bool apply_scene_override(SystemConfig &cfg, const std::string &key, const std::string &value) {
    static const std::map<std::string, std::string> table = {
        {"scene.D_x", "D_x"},       {"scene.D_y", "D_y"},
        {"scene.d", "d"},           {"scene.L", "L"},
        {"scene.Q", "Q"},           {"scene.N", "N"},
        {"scene.K", "K"},           {"scene.feed_x", "feed_x"},
        {"scene.seed", "seed"},     {"channel.f_c", "f_c"},
        {"channel.n_e", "n_e"},     {"channel.S_scat", "S_scat"},
        {"channel.p_los", "p_los"}, {"channel.sigma_s_sq", "sigma_s_sq"},
        {"channel.coupling_mode", "coupling_mode"},
        {"pilots.T", "T"},          {"pilots.snr_db", "snr_db"},
    };
    const auto it = table.find(key);
    if (it == table.end())
        return false;
    apply_config_entry(cfg, it->second, value);
    return true;
}

bool apply_train_override(TrainConfig &tc, const std::string &key, const std::string &value) {
    using passim::detail::parse_double;
    using passim::detail::parse_int;
    if (key == "train.batch") tc.batch = static_cast<int>(parse_int(key, value));
    else if (key == "train.epochs") tc.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "train.lr") tc.lr = parse_double(key, value);
    else if (key == "train.split") tc.split = parse_double(key, value);
    else if (key == "train.seed") tc.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "train.snr_lo_db") tc.snr_lo_db = parse_double(key, value);
    else if (key == "train.snr_hi_db") tc.snr_hi_db = parse_double(key, value);
    else return false;
    return true;
}

bool is_model_override(const std::string &key) { return key.rfind("model.", 0) == 0; }

void apply_model_override(PAMoEConfig &mc, const std::string &key, const std::string &value) {
    using passim::detail::parse_int;
    if (key == "model.N_max") mc.N_max = static_cast<int>(parse_int(key, value));
    else if (key == "model.F") mc.F = static_cast<int>(parse_int(key, value));
    else if (key == "model.d_embed") mc.d_embed = static_cast<int>(parse_int(key, value));
    else if (key == "model.d_hid") { mc.d_hid = static_cast<int>(parse_int(key, value)); mc.d_embed = mc.d_hid; }
    else if (key == "model.E") mc.E = static_cast<int>(parse_int(key, value));
    else throw ConfigError("unknown override key '" + key + "' for pamoe");
}

void apply_model_override(PAformerConfig &mc, const std::string &key, const std::string &value) {
    using passim::detail::parse_int;
    if (key == "model.d_hid") mc.d_hid = static_cast<int>(parse_int(key, value));
    else if (key == "model.P_blocks") mc.P_blocks = static_cast<int>(parse_int(key, value));
    else if (key == "model.n_heads") mc.n_heads = static_cast<int>(parse_int(key, value));
    else if (key == "model.ffn_mult") mc.ffn_mult = static_cast<int>(parse_int(key, value));
    else if (key == "model.strict_paper_block") mc.strict_paper_block = parse_int(key, value) != 0;
    else throw ConfigError("unknown override key '" + key + "' for paformer");
}

SystemConfig resolve_config(const std::string &config_path, const Overrides &ov) {
    SystemConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in)
            throw IoError(IoError::Code::open_failed, "cannot open config '" + config_path + "'");
        cfg = parse_system_config(in);
    }
    for (const auto &[k, v] : ov.entries) {
        if (k.rfind("scene.", 0) == 0 || k.rfind("channel.", 0) == 0 || k.rfind("pilots.", 0) == 0) {
            if (!apply_scene_override(cfg, k, v))
                throw ConfigError("unknown override key '" + k + "'");
        }
    }
    cfg.validate();
    return cfg;
}

std::string canonical_model_id(std::string name) {
    if (name == "pamoe")
        return kPamoeModelId;
    if (name == "paformer")
        return kPaformerModelId;
    return name;
}

std::unique_ptr<NeuralEstimator> build_fresh_model(const std::string &model_id, int pilot_slots,
                                                   const Overrides &ov, std::uint64_t init_seed) {
    if (model_id == kPamoeModelId) {
        PAMoEConfig mc;
        mc.T = pilot_slots;
        for (const auto &[k, v] : ov.entries)
            if (is_model_override(k))
                apply_model_override(mc, k, v);
        mc.validate();
        return std::make_unique<PAMoE>(mc, init_seed);
    }
    if (model_id == kPaformerModelId) {
        PAformerConfig mc;
        mc.T = pilot_slots;
        for (const auto &[k, v] : ov.entries)
            if (is_model_override(k))
                apply_model_override(mc, k, v);
        mc.validate();
        return std::make_unique<PAformer>(mc, init_seed);
    }
    throw ConfigError("unknown model '" + model_id + "' (expected pamoe or paformer)");
}

void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError(IoError::Code::open_failed, "cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush())
        throw IoError(IoError::Code::write_failed, "write failed for '" + path + "'");
}

std::vector<std::string> csv_comments(const SystemConfig &cfg, const Overrides &ov) {
    std::vector<std::string> comments;
    std::ostringstream hash;
    hash << "config_hash=0x" << std::hex << config_hash(cfg);
    comments.push_back(hash.str());
    for (const auto &line : ov.echo())
        comments.push_back(line);
    return comments;
}

// --- commands -------------------------------------------------------------------

int cmd_generate(const std::string &config_path, const Overrides &ov, const std::string &out_path,
                 std::uint64_t samples, std::optional<std::uint64_t> seed, std::optional<double> snr_fixed,
                 const std::string &snr_range) {
    SystemConfig cfg = resolve_config(config_path, ov);
    const std::uint64_t base_seed = seed.value_or(cfg.seed);

    SnrSpec snr = SnrSpec::fixed(cfg.snr_db);
    if (!snr_range.empty()) {
        const auto colon = snr_range.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--snr-range expects LO:HI, got '" + snr_range + "'");
        snr = SnrSpec::range(passim::detail::parse_double("snr-range", snr_range.substr(0, colon)),
                             passim::detail::parse_double("snr-range", snr_range.substr(colon + 1)));
    } else if (snr_fixed) {
        snr = SnrSpec::fixed(*snr_fixed);
    }

    const Dataset ds = build_dataset(cfg, samples, base_seed, snr);
    save_dataset(ds, out_path);
    std::cout << "wrote " << ds.records.size() << " records (N=" << cfg.N << ", T=" << cfg.T << ") to "
              << out_path << "\n";
    return kExitOk;
}

int cmd_train(const std::string &config_path, const Overrides &ov, const std::string &dataset_path,
              const std::string &model_name, const std::string &out_path, const std::string &log_path,
              std::optional<std::uint64_t> seed) {
    const Dataset ds = load_dataset(dataset_path);
    TrainConfig tc;
    tc.model = canonical_model_id(model_name);
    for (const auto &[k, v] : ov.entries)
        if (k.rfind("train.", 0) == 0 && !apply_train_override(tc, k, v))
            throw ConfigError("unknown override key '" + k + "'");
    if (seed)
        tc.seed = *seed;
    tc.validate();

    auto model = build_fresh_model(tc.model, ds.meta.cfg.T, ov, derive_seed(tc.seed, kStreamModelInit));
    const TrainResult result = train(*model, ds, tc);

    SystemConfig cfg = ds.meta.cfg;
    if (!config_path.empty())
        cfg = resolve_config(config_path, ov);
    const auto ck = diff::make_checkpoint(model->store(), model->model_id(), serialize_system_config(cfg),
                                          tc.to_text(), model->model_config_text());
    diff::save_checkpoint(ck, out_path);

    std::string log_text;
    for (const auto &row : result.log)
        log_text += train_log_line(row) + "\n";
    write_text_file(log_path.empty() ? out_path + ".log" : log_path, log_text);

    std::cout << "trained " << model->model_id() << " for " << result.log.size() << " epochs; best val NMSE "
              << result.best_val_nmse << " at epoch " << result.best_epoch << "; checkpoint " << out_path
              << "\n";
    return kExitOk;
}

int cmd_eval(const std::string &checkpoint_path, const std::string &dataset_path, const std::string &out_path,
             const Overrides &ov) {
    auto model = load_estimator_file(checkpoint_path);
    const Dataset ds = load_dataset(dataset_path);
    const auto t0 = std::chrono::steady_clock::now();
    const NmseResult r = evaluate_model(*model, ds.records);

    MetricsRow row;
    row.estimator = model->model_id();
    row.N = ds.meta.cfg.N;
    row.T = model->pilot_slots();
    row.snr_db = ds.meta.cfg.snr_db;
    row.nmse = r.value;
    row.nmse_db = nmse_to_db(r.value);
    row.flops = count_flops_by_id(model->model_id(), model->model_config_text(), ds.meta.cfg.N);
    row.params = count_params_by_id(model->model_id(), model->model_config_text());
    row.seed = static_cast<std::int64_t>(ds.meta.creation_seed);
    row.wallclock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!out_path.empty())
        write_text_file(out_path, metrics_csv({row}, csv_comments(ds.meta.cfg, ov)));
    std::cout << metrics_row_csv(row) << "\n";
    if (r.excluded)
        std::cerr << "warning: " << r.excluded << " zero-norm labels excluded\n";
    return kExitOk;
}

int cmd_baseline(const std::string &dataset_path, const std::string &estimator, bool identity_cov,
                 const std::string &out_path, const Overrides &ov) {
    const Dataset ds = load_dataset(dataset_path);
    std::vector<MetricsRow> rows;
    auto make_row = [&](const std::string &id, const NmseResult &r, double wall) {
        MetricsRow row;
        row.estimator = id;
        row.N = ds.meta.cfg.N;
        row.T = ds.meta.cfg.N; // identity switching schedule
        row.snr_db = ds.meta.cfg.snr_db;
        row.nmse = r.value;
        row.nmse_db = nmse_to_db(r.value);
        row.seed = static_cast<std::int64_t>(ds.meta.creation_seed);
        row.wallclock_s = wall;
        rows.push_back(row);
    };

    if (estimator == "ls" || estimator == "both") {
        const auto t0 = std::chrono::steady_clock::now();
        make_row("ls", baseline_ls_nmse(ds),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (estimator == "lmmse" || estimator == "both") {
        const auto t0 = std::chrono::steady_clock::now();
        CovarianceModel id_cov = CovarianceModel::identity(ds.meta.cfg.N);
        make_row("lmmse", baseline_lmmse_nmse(ds, identity_cov ? &id_cov : nullptr),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    if (rows.empty())
        throw ConfigError("--estimator must be ls, lmmse or both, got '" + estimator + "'");

    if (!out_path.empty())
        write_text_file(out_path, metrics_csv(rows, csv_comments(ds.meta.cfg, ov)));
    for (const auto &row : rows)
        std::cout << metrics_row_csv(row) << "\n";
    return kExitOk;
}

std::vector<SweepEstimator> resolve_estimators(const std::string &estimators_csv,
                                               const std::vector<std::string> &checkpoint_args,
                                               bool identity_cov) {
    std::map<std::string, std::string> checkpoints;
    for (const auto &arg : checkpoint_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos) {
            checkpoints["*"] = arg;
        } else {
            checkpoints[canonical_model_id(arg.substr(0, eq))] = arg.substr(eq + 1);
        }
    }

    std::vector<SweepEstimator> out;
    std::istringstream in(estimators_csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = passim::detail::trim(tok);
        if (tok.empty())
            continue;
        SweepEstimator est;
        if (tok == "ls" || tok == "lmmse") {
            est.id = tok;
            est.use_identity_cov = identity_cov;
        } else {
            const std::string id = canonical_model_id(tok);
            auto it = checkpoints.find(id);
            if (it == checkpoints.end())
                it = checkpoints.find("*");
            if (it == checkpoints.end())
                throw ConfigError("missing checkpoint for estimator '" + id +
                                  "' (pass --checkpoint " + id + "=PATH)");
            est.model = std::shared_ptr<NeuralEstimator>(load_estimator_file(it->second));
            if (est.model->model_id() != id)
                throw ConfigError("checkpoint '" + it->second + "' holds model '" + est.model->model_id() +
                                  "', not '" + id + "'");
            est.id = id;
        }
        out.push_back(std::move(est));
    }
    if (out.empty())
        throw ConfigError("no estimators requested");
    return out;
}

template <typename T>
std::vector<T> parse_grid(const std::string &csv, const char *what) {
    std::vector<T> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = passim::detail::trim(tok);
        if (tok.empty())
            continue;
        if constexpr (std::is_same_v<T, int>)
            out.push_back(static_cast<int>(passim::detail::parse_int(what, tok)));
        else
            out.push_back(passim::detail::parse_double(what, tok));
    }
    if (out.empty())
        throw ConfigError(std::string(what) + ": empty grid");
    return out;
}

int cmd_sweep(SweepRequest::Kind kind, const std::string &config_path, const Overrides &ov,
              const std::string &estimators_csv, const std::vector<std::string> &checkpoint_args,
              const std::string &snr_grid_csv, const std::string &n_grid_csv, double fixed_snr,
              int n_seeds, std::uint64_t records, std::optional<std::uint64_t> seed,
              const std::string &out_path, bool identity_cov) {
    SweepRequest req;
    req.kind = kind;
    req.cfg = resolve_config(config_path, ov);
    req.estimators = resolve_estimators(estimators_csv, checkpoint_args, identity_cov);
    req.snr_grid = parse_grid<double>(snr_grid_csv, "--snr-grid");
    req.n_grid = parse_grid<int>(n_grid_csv, "--n-grid");
    req.fixed_snr_db = fixed_snr;
    req.n_seeds = n_seeds;
    req.records_per_cell = records;
    req.base_seed = seed.value_or(req.cfg.seed);

    const auto rows = run_sweep(req);
    const std::string csv = metrics_csv(rows, csv_comments(req.cfg, ov));
    if (!out_path.empty())
        write_text_file(out_path, csv);
    std::cout << csv;
    return kExitOk;
}

int cmd_flops(const std::string &model_name, const std::string &checkpoint_path, const Overrides &ov,
              const std::string &n_list_csv, const std::string &out_path, int pilot_slots) {
    std::string model_id;
    std::string config_text;
    if (!checkpoint_path.empty()) {
        const auto ck = diff::load_checkpoint(checkpoint_path);
        model_id = ck.model_id;
        config_text = ck.model_config_text;
    } else {
        auto model = build_fresh_model(canonical_model_id(model_name), pilot_slots, ov, 1);
        model_id = model->model_id();
        config_text = model->model_config_text();
    }

    const auto n_list = parse_grid<int>(n_list_csv, "--n-list");
    const ComplexityReport rep = complexity_report(model_id, config_text, n_list);

    std::string csv = "model,N,flops,params\n";
    for (const auto &e : rep.per_n)
        csv += rep.model_id + "," + std::to_string(e.N) + "," + std::to_string(e.flops) + "," +
               std::to_string(rep.params) + "\n";
    if (!out_path.empty())
        write_text_file(out_path, csv);
    std::cout << csv;
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"passim: pinching-antenna system simulation and channel estimation"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, checkpoint_path, out_path, log_path;
    std::vector<std::string> sets, checkpoint_args;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", config_path, "system configuration file");
        cmd->add_option("--set", sets, "override, dotted key=value (repeatable)")->take_all();
        cmd->add_option("--seed", seed, "base seed");
    };

    // generate
    auto *gen = app.add_subcommand("generate", "generate a dataset file");
    std::uint64_t samples = 1000;
    std::optional<double> snr_fixed;
    std::string snr_range;
    add_common(gen);
    gen->add_option("--out", out_path, "output dataset path")->required();
    gen->add_option("--samples", samples, "number of records");
    gen->add_option("--snr", snr_fixed, "fixed per-record SNR in dB");
    gen->add_option("--snr-range", snr_range, "uniform per-record SNR range LO:HI in dB");

    // train
    auto *tr = app.add_subcommand("train", "train a neural estimator on a dataset");
    std::string model_name = "pamoe";
    add_common(tr);
    tr->add_option("--dataset", dataset_path, "training dataset")->required();
    tr->add_option("--model", model_name, "pamoe or paformer");
    tr->add_option("--out", out_path, "checkpoint output path")->required();
    tr->add_option("--log", log_path, "training log path (default: <out>.log)");

    // eval
    auto *ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(ev);
    ev->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    ev->add_option("--dataset", dataset_path, "evaluation dataset")->required();
    ev->add_option("--out", out_path, "metrics CSV output path");

    // baseline
    auto *bl = app.add_subcommand("baseline", "run the switching LS/LMMSE baselines on a dataset");
    std::string estimator = "both";
    bool identity_cov = false;
    add_common(bl);
    bl->add_option("--dataset", dataset_path, "evaluation dataset")->required();
    bl->add_option("--estimator", estimator, "ls, lmmse or both");
    bl->add_flag("--identity-cov", identity_cov, "use the identity covariance for LMMSE");
    bl->add_option("--out", out_path, "metrics CSV output path");

    // sweeps
    std::string estimators_csv = "ls";
    std::string snr_grid_csv = "-10,-5,0,5,10,15,20";
    std::string n_grid_csv = "8,12,16,20,24,28,32";
    double fixed_snr = 0.0;
    int n_seeds = 1;
    std::uint64_t records = 2000;

    auto add_sweep_opts = [&](CLI::App *cmd) {
        add_common(cmd);
        cmd->add_option("--estimators", estimators_csv, "comma list: ls,lmmse,pamoe,paformer");
        cmd->add_option("--checkpoint", checkpoint_args, "model checkpoint, NAME=PATH (repeatable)")
            ->take_all();
        cmd->add_option("--seeds", n_seeds, "seeds per cell");
        cmd->add_option("--records", records, "records per cell");
        cmd->add_option("--out", out_path, "metrics CSV output path")->required();
        cmd->add_flag("--identity-cov", identity_cov, "use the identity covariance for LMMSE");
    };
    auto *ss = app.add_subcommand("sweep-snr", "NMSE over an SNR grid at fixed N");
    add_sweep_opts(ss);
    ss->add_option("--snr-grid", snr_grid_csv, "comma list of SNRs in dB");
    auto *sn = app.add_subcommand("sweep-n", "NMSE over antenna counts at fixed SNR");
    add_sweep_opts(sn);
    sn->add_option("--n-grid", n_grid_csv, "comma list of antenna counts");
    sn->add_option("--snr", fixed_snr, "evaluation SNR in dB");

    // flops
    auto *fl = app.add_subcommand("flops", "analytic multiply-add and parameter counts");
    std::string n_list_csv = "8,12,16,20,24,28,32,40";
    int pilot_slots = 4;
    add_common(fl);
    fl->add_option("--model", model_name, "pamoe or paformer");
    fl->add_option("--checkpoint", checkpoint_path, "take architecture from a checkpoint");
    fl->add_option("--n-list", n_list_csv, "antenna counts to report");
    fl->add_option("--pilot-slots", pilot_slots, "pilot slots T for a fresh model");
    fl->add_option("--out", out_path, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        Overrides ov;
        ov.parse(sets);
        if (gen->parsed())
            return cmd_generate(config_path, ov, out_path, samples, seed, snr_fixed, snr_range);
        if (tr->parsed())
            return cmd_train(config_path, ov, dataset_path, model_name, out_path, log_path, seed);
        if (ev->parsed())
            return cmd_eval(checkpoint_path, dataset_path, out_path, ov);
        if (bl->parsed())
            return cmd_baseline(dataset_path, estimator, identity_cov, out_path, ov);
        if (ss->parsed())
            return cmd_sweep(SweepRequest::Kind::over_snr, config_path, ov, estimators_csv, checkpoint_args,
                             snr_grid_csv, n_grid_csv, fixed_snr, n_seeds, records, seed, out_path,
                             identity_cov);
        if (sn->parsed())
            return cmd_sweep(SweepRequest::Kind::over_n, config_path, ov, estimators_csv, checkpoint_args,
                             snr_grid_csv, n_grid_csv, fixed_snr, n_seeds, records, seed, out_path,
                             identity_cov);
        if (fl->parsed())
            return cmd_flops(model_name, checkpoint_path, ov, n_list_csv, out_path, pilot_slots);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const CapacityError &e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const IoError &e) {
        std::cerr << "io error (" << IoError::code_name(e.code()) << "): " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
